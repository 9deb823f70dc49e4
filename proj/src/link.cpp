#include "fogbench/link.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fogbench {

SimTime propagation_delay(const LinkSpec& spec, double distance_km) {
    return ms_to_ns(distance_km * spec.delay_per_km_ms);
}

Link::Link(LinkSpec spec, double distance_km, TransportParams transport)
    : spec_(spec),
      distance_km_(distance_km),
      transport_(transport),
      nominal_prop_(propagation_delay(spec, distance_km)) {
    validate(spec_);
    if (distance_km_ < 0.0) throw InvalidParameter("link: distance_km must be >= 0");
    if (transport_.mtu_bits <= 0) throw InvalidParameter("link: mtu_bits must be > 0");
    if (transport_.rto_factor < 0.0) throw InvalidParameter("link: rto_factor must be >= 0");
}

SimTime Link::min_propagation() const {
    return ms_to_ns(distance_km_ * spec_.delay_per_km_ms * (1.0 - 3.0 * spec_.jitter_frac));
}

SimTime Link::serialization(std::int64_t bits) const {
    return static_cast<SimTime>(
        std::llround(static_cast<double>(bits) * 1e9 / spec_.bandwidth_bps));
}

SimTime Link::draw_propagation(Rng& rng) {
    if (spec_.jitter_frac == 0.0 || nominal_prop_ == 0) return nominal_prop_;
    double z = jitter_(rng);
    while (std::abs(z) > 3.0) z = jitter_(rng);
    return ms_to_ns(distance_km_ * spec_.delay_per_km_ms * (1.0 + spec_.jitter_frac * z));
}

DeliveryOutcome Link::transmit(SimTime now, std::int64_t msg_size_bits, Rng& rng) {
    if (msg_size_bits <= 0) throw std::invalid_argument("transmit: message size must be > 0");

    DeliveryOutcome out;
    out.deliver_time = now;
    ++counters_.messages;
    counters_.message_bits += msg_size_bits;

    const double fail_rate = spec_.loss_rate + spec_.corrupt_rate;
    std::int64_t remaining = msg_size_bits;
    while (remaining > 0) {
        const std::int64_t bits = std::min(remaining, transport_.mtu_bits);
        remaining -= bits;
        ++out.packets;
        const SimTime ser = serialization(bits);

        SimTime ready = now;
        SimTime arrival = 0;
        for (;;) {
            const SimTime start = std::max(busy_until_, ready);
            busy_until_ = start + ser;
            ++out.attempts;
            ++counters_.packets_generated;
            counters_.bits_on_wire += bits;
            const SimTime prop = draw_propagation(rng);
            if (fail_rate > 0.0) {
                const double u = unit_(rng);
                if (u < fail_rate) {
                    if (u < spec_.loss_rate) {
                        ++counters_.packets_lost;
                    } else {
                        ++counters_.packets_corrupted;
                    }
                    ++out.retransmissions;
                    ++counters_.retransmissions;
                    ready = start + static_cast<SimTime>(std::llround(
                                        transport_.rto_factor * static_cast<double>(prop + ser)));
                    continue;
                }
            }
            arrival = start + ser + prop;
            break;
        }

        if (spec_.dup_rate > 0.0 && unit_(rng) < spec_.dup_rate) {
            busy_until_ += ser;
            ++out.attempts;
            ++out.duplicates;
            ++counters_.packets_generated;
            ++counters_.duplicates_discarded;
            counters_.bits_on_wire += bits;
        }
        if (spec_.reorder_rate > 0.0 && unit_(rng) < spec_.reorder_rate) {
            arrival += ser;
            ++counters_.reordered;
        }
        ++counters_.packets_delivered;
        out.deliver_time = std::max(out.deliver_time, arrival);
    }
    return out;
}

}  // namespace fogbench
