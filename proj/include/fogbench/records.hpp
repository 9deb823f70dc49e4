// Data items flowing from sensors to the cloud store, and the offline
// queries issued against it.

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "fogbench/time.hpp"

namespace fogbench {

inline constexpr std::size_t kMaxChannels = 4;

/// Fixed-point scale of quantized channel samples (value * 2^20).
inline constexpr double kSampleScale = 1048576.0;

inline double dequantize(std::int64_t q) { return static_cast<double>(q) / kSampleScale; }

struct SensorReading {
    int sensor_id = 0;
    int site_id = 0;
    std::int64_t seq = 0;
    SimTime gen_time = 0;
    std::array<std::int64_t, kMaxChannels> channels{};
    bool exceeds = false;
};

struct AggregateRecord {
    int site_id = 0;
    int sensor_id = 0;
    std::int64_t window_seq = 0;
    SimTime gen_time = 0;  // window start
    std::array<double, kMaxChannels> channel_means{};
    std::int64_t size_bits = 0;
};

struct AnnotatedRecord {
    AggregateRecord record;
    double event_probability = 0.0;
    SimTime inference_time = 0;
};

struct EventReport {
    std::uint64_t report_id = 0;
    int site_id = 0;
    SimTime trigger_time = 0;
    std::int64_t exceed_count = 0;
    std::int64_t dumps = 0;          // sensors whose buffers are included
    std::int64_t readings = 0;
    std::int64_t size_bits = 0;
};

enum class QueryKind : std::uint8_t { recent_1h, random_1h, scan_filter };

std::string_view to_string(QueryKind kind);
QueryKind query_kind_from_string(std::string_view s);

struct Interval {
    SimTime start = 0;  // inclusive
    SimTime end = 0;    // exclusive

    bool contains(SimTime t) const { return start <= t && t < end; }
    friend bool operator==(const Interval&, const Interval&) = default;
};

struct Query {
    std::uint64_t query_id = 0;
    int client_id = 0;
    QueryKind kind = QueryKind::recent_1h;
    SimTime issue_time = 0;
    std::optional<Interval> interval;   // absent for scan_filter
    std::optional<double> threshold;    // scan_filter only
    SimTime lookback = 0;               // scan_filter; 0 = entire retained history

    friend bool operator==(const Query&, const Query&) = default;
};

/// Identity of one stored record.
struct RecordKey {
    int site_id = 0;
    int sensor_id = 0;
    std::int64_t window_seq = 0;

    friend bool operator==(const RecordKey&, const RecordKey&) = default;
    friend auto operator<=>(const RecordKey&, const RecordKey&) = default;
};

/// A record as returned by the store.
struct ResultRecord {
    RecordKey key;
    SimTime gen_time = 0;
    double event_probability = 0.0;

    friend bool operator==(const ResultRecord&, const ResultRecord&) = default;
};

}  // namespace fogbench
