// Open-model generators: per-sensor reading streams with local ring
// buffers and per-sensor aggregation, and offline query clients.

#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "fogbench/link.hpp"
#include "fogbench/model.hpp"
#include "fogbench/records.hpp"

namespace fogbench {

/// Offset of channel 0 for readings that exceed the threshold, in units of
/// the baseline standard deviation.
inline constexpr double kExceedOffsetSigma = 6.0;

/// Ring of the most recent readings of one sensor, oldest evicted first.
class SensorBuffer {
public:
    explicit SensorBuffer(std::size_t capacity);

    void push(const SensorReading& r);
    std::size_t size() const { return size_; }
    std::size_t capacity() const { return slots_.size(); }

    /// Readings in chronological order.
    std::vector<SensorReading> snapshot() const;

    /// i-th reading, 0 = oldest.
    const SensorReading& at(std::size_t i) const;

private:
    std::vector<SensorReading> slots_;
    std::size_t head_ = 0;  // next write position
    std::size_t size_ = 0;
};

struct SensorState {
    SensorState(int site_id, int sensor_id, const WorkloadParams& params);

    int site_id;
    int sensor_id;
    std::size_t channels;
    std::int64_t resolution_bits;
    std::int64_t n_agg;
    double exceed_prob;
    std::int64_t next_seq = 0;
    SensorBuffer buffer;

    // aggregation window
    std::int64_t window_seq = 0;
    std::int64_t window_count = 0;
    SimTime window_start = 0;
    std::array<std::int64_t, kMaxChannels> window_sum{};

    std::normal_distribution<double> noise{0.0, 1.0};
    std::uniform_real_distribution<double> unit{0.0, 1.0};
};

/// Fixed header bits added to every aggregate and dump message.
inline constexpr std::int64_t kRecordHeaderBits = 128;

/// Draws the reading for tick `gen_time` and appends it to the buffer.
SensorReading next_reading(SensorState& sensor, SimTime gen_time, Rng& rng);

/// Emits the per-channel mean every n_agg-th reading.
std::optional<AggregateRecord> maybe_aggregate(SensorState& sensor, const SensorReading& reading);

struct BufferDump {
    int site_id = 0;
    int sensor_id = 0;
    std::vector<SensorReading> readings;
    std::int64_t payload_bits = 0;
    std::int64_t size_bits = 0;
};

/// Non-destructive copy of the whole buffer as one message.
BufferDump dump_buffer(const SensorState& sensor);

/// Payload bits a dump would carry, without copying the readings.
std::int64_t dump_payload_bits(const SensorState& sensor);

struct ClientState {
    int client_id = 0;
    std::uint32_t next_seq = 0;
    std::uniform_real_distribution<double> unit{0.0, 1.0};
};

inline constexpr SimTime kQueryInterval = 3600 * kNanosPerSecond;

/// Samples the next query kind and fills its fields. `history_start` is
/// the earliest time data can exist (run start).
Query next_query(ClientState& client, const WorkloadParams& params, Rng& rng, SimTime now,
                 SimTime history_start = 0);

/// [issue - 1 h, issue).
Interval recent_interval(SimTime issue);

}  // namespace fogbench
