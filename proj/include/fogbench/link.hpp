// Point-to-point link emulation: FIFO serialization at the link bandwidth,
// distance-proportional propagation with truncated-normal jitter, and a
// simplified reliable in-order transport on top of per-packet impairments.
//
// Loss and corruption each cost one retransmission timeout
// (rto_factor * (propagation + serialization), no backoff). A duplicated
// packet occupies the link once more and is discarded by the receiver. A
// reordered packet is deferred by one packet slot. A message is delivered
// when its last fragment has arrived.

#pragma once

#include <cstdint>
#include <random>

#include "fogbench/model.hpp"
#include "fogbench/time.hpp"

namespace fogbench {

using Rng = std::mt19937_64;

struct TransportParams {
    std::int64_t mtu_bits = 12'000;
    double rto_factor = 2.0;
};

struct DeliveryOutcome {
    SimTime deliver_time = 0;
    std::int64_t packets = 0;          // fragments of the message
    std::int64_t attempts = 0;         // transmissions incl. retransmissions and duplicates
    std::int64_t retransmissions = 0;
    std::int64_t duplicates = 0;
};

struct LinkCounters {
    std::int64_t messages = 0;
    std::int64_t message_bits = 0;     // offered message bits, headers included
    std::int64_t packets_generated = 0;
    std::int64_t packets_delivered = 0;
    std::int64_t packets_lost = 0;
    std::int64_t packets_corrupted = 0;
    std::int64_t duplicates_discarded = 0;
    std::int64_t reordered = 0;
    std::int64_t retransmissions = 0;
    std::int64_t bits_on_wire = 0;
};

class Link {
public:
    Link(LinkSpec spec, double distance_km, TransportParams transport = {});

    /// Sends one message of `msg_size_bits` at `now`. Requires msg_size_bits > 0.
    DeliveryOutcome transmit(SimTime now, std::int64_t msg_size_bits, Rng& rng);

    /// Jitter-free propagation delay over the full distance.
    SimTime nominal_propagation() const { return nominal_prop_; }

    /// Lower bound on propagation under the truncated jitter.
    SimTime min_propagation() const;

    SimTime serialization(std::int64_t bits) const;

    const LinkSpec& spec() const { return spec_; }
    double distance_km() const { return distance_km_; }
    SimTime busy_until() const { return busy_until_; }
    const LinkCounters& counters() const { return counters_; }

private:
    SimTime draw_propagation(Rng& rng);

    LinkSpec spec_;
    double distance_km_;
    TransportParams transport_;
    SimTime nominal_prop_;
    SimTime busy_until_ = 0;
    LinkCounters counters_;
    std::normal_distribution<double> jitter_{0.0, 1.0};
    std::uniform_real_distribution<double> unit_{0.0, 1.0};
};

/// Jitter-free propagation for `distance_km` over `spec`.
SimTime propagation_delay(const LinkSpec& spec, double distance_km);

}  // namespace fogbench
