#include "fogbench/workload.hpp"

#include <cmath>
#include <stdexcept>

namespace fogbench {

std::string_view to_string(QueryKind kind) {
    switch (kind) {
        case QueryKind::recent_1h: return "recent_1h";
        case QueryKind::random_1h: return "random_1h";
        case QueryKind::scan_filter: return "scan_filter";
    }
    return "?";
}

QueryKind query_kind_from_string(std::string_view s) {
    if (s == "recent_1h") return QueryKind::recent_1h;
    if (s == "random_1h") return QueryKind::random_1h;
    if (s == "scan_filter") return QueryKind::scan_filter;
    throw std::invalid_argument("unknown query kind '" + std::string(s) + "'");
}

SensorBuffer::SensorBuffer(std::size_t capacity) : slots_(capacity) {
    if (capacity == 0) throw std::invalid_argument("SensorBuffer: capacity must be > 0");
}

void SensorBuffer::push(const SensorReading& r) {
    slots_[head_] = r;
    head_ = (head_ + 1) % slots_.size();
    if (size_ < slots_.size()) ++size_;
}

const SensorReading& SensorBuffer::at(std::size_t i) const {
    if (i >= size_) throw std::out_of_range("SensorBuffer::at");
    const std::size_t oldest = (head_ + slots_.size() - size_) % slots_.size();
    return slots_[(oldest + i) % slots_.size()];
}

std::vector<SensorReading> SensorBuffer::snapshot() const {
    std::vector<SensorReading> out;
    out.reserve(size_);
    for (std::size_t i = 0; i < size_; ++i) out.push_back(at(i));
    return out;
}

SensorState::SensorState(int site, int sensor, const WorkloadParams& params)
    : site_id(site),
      sensor_id(sensor),
      channels(static_cast<std::size_t>(params.channels)),
      resolution_bits(params.resolution_bits),
      n_agg(params.n_agg),
      exceed_prob(params.exceed_prob),
      buffer(static_cast<std::size_t>(params.buffer_size)) {
    if (channels == 0 || channels > kMaxChannels) {
        throw InvalidParameter("workload.channels: must be in [1, " +
                               std::to_string(kMaxChannels) + "]");
    }
}

SensorReading next_reading(SensorState& sensor, SimTime gen_time, Rng& rng) {
    SensorReading r;
    r.sensor_id = sensor.sensor_id;
    r.site_id = sensor.site_id;
    r.seq = sensor.next_seq++;
    r.gen_time = gen_time;
    r.exceeds = sensor.exceed_prob > 0.0 && sensor.unit(rng) < sensor.exceed_prob;
    for (std::size_t c = 0; c < sensor.channels; ++c) {
        double v = sensor.noise(rng);
        if (c == 0 && r.exceeds) v += kExceedOffsetSigma;
        r.channels[c] = static_cast<std::int64_t>(std::llround(v * kSampleScale));
    }
    sensor.buffer.push(r);
    return r;
}

std::optional<AggregateRecord> maybe_aggregate(SensorState& sensor, const SensorReading& reading) {
    if (sensor.window_count == 0) sensor.window_start = reading.gen_time;
    for (std::size_t c = 0; c < sensor.channels; ++c) sensor.window_sum[c] += reading.channels[c];
    if (++sensor.window_count < sensor.n_agg) return std::nullopt;

    AggregateRecord rec;
    rec.site_id = sensor.site_id;
    rec.sensor_id = sensor.sensor_id;
    rec.window_seq = sensor.window_seq++;
    rec.gen_time = sensor.window_start;
    for (std::size_t c = 0; c < sensor.channels; ++c) {
        rec.channel_means[c] = dequantize(sensor.window_sum[c]) / static_cast<double>(sensor.n_agg);
    }
    rec.size_bits = sensor.resolution_bits + kRecordHeaderBits;
    sensor.window_count = 0;
    sensor.window_sum.fill(0);
    return rec;
}

std::int64_t dump_payload_bits(const SensorState& sensor) {
    return static_cast<std::int64_t>(sensor.buffer.size()) * sensor.resolution_bits;
}

BufferDump dump_buffer(const SensorState& sensor) {
    BufferDump d;
    d.site_id = sensor.site_id;
    d.sensor_id = sensor.sensor_id;
    d.readings = sensor.buffer.snapshot();
    d.payload_bits = dump_payload_bits(sensor);
    d.size_bits = d.payload_bits + kRecordHeaderBits;
    return d;
}

Interval recent_interval(SimTime issue) { return {issue - kQueryInterval, issue}; }

Query next_query(ClientState& client, const WorkloadParams& params, Rng& rng, SimTime now,
                 SimTime history_start) {
    Query q;
    q.query_id = (static_cast<std::uint64_t>(client.client_id) << 32) | client.next_seq++;
    q.client_id = client.client_id;
    q.issue_time = now;

    const double u = client.unit(rng);
    if (u < params.q_recent) {
        q.kind = QueryKind::recent_1h;
        q.interval = recent_interval(now);
    } else if (u < params.q_recent + params.q_random) {
        q.kind = QueryKind::random_1h;
        const SimTime history = now - history_start;
        if (history <= kQueryInterval) {
            q.interval = Interval{history_start, now};
        } else {
            const double v = client.unit(rng);
            const auto span = static_cast<double>(history - kQueryInterval);
            const SimTime start = history_start + static_cast<SimTime>(std::floor(v * span));
            q.interval = Interval{start, start + kQueryInterval};
        }
    } else {
        q.kind = QueryKind::scan_filter;
        q.threshold = params.scan_threshold;
        q.lookback = seconds_to_ns(params.scan_lookback_s);
    }
    return q;
}

}  // namespace fogbench
