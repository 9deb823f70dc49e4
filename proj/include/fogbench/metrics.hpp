// Metric families: offset-corrected end-to-end latency, staleness
// violations of most-recent reads, cloud request latency, the edge SLO
// resource search and request-rate calibration.

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fogbench/model.hpp"
#include "fogbench/time.hpp"

namespace fogbench {

enum class SampleKind : std::uint8_t { e2e_insert, event_report, query };

std::string_view to_string(SampleKind kind);

struct LatencySample {
    SampleKind kind = SampleKind::e2e_insert;
    SimTime issue_time = 0;
    SimTime raw_ns = 0;
    SimTime corrected_ns = 0;  // e2e kinds only; equals raw_ns for queries
    std::string subject;
};

/// Nearest-rank percentile, `percent` in (0, 100]. Absent for no samples.
std::optional<SimTime> percentile(std::vector<SimTime> samples, double percent);

/// Same on already sorted samples.
std::optional<SimTime> percentile_sorted(const std::vector<SimTime>& sorted, double percent);

struct LatencySummary {
    std::int64_t count = 0;
    std::optional<SimTime> p50, p90, p99, max;
    std::optional<double> mean;
};

LatencySummary summarize(std::vector<SimTime> samples);

/// Jitter-free propagation along sensor -> gateway -> on-premise -> cloud
/// for `site_id`; serialization is excluded. Throws ConfigError for an
/// unknown site.
SimTime propagation_offset(const Topology& topology, int site_id);

// ---------------------------------------------------------------------------
// Staleness

/// What the harness records for each recent_1h query at issue time.
struct StalenessProbe {
    SimTime issue_time = 0;
    std::int64_t due_in_result = 0;  // result records with gen_time <= issue - t_stale
};

/// A query violates iff the omniscient log holds a record with gen_time in
/// [issue - 1 h, issue - t_stale] that its result lacks. Probes must be
/// post warm-up recent_1h queries. `omniscient_gen_times` must be sorted.
/// Absent when there are no probes.
std::optional<double> staleness_violation_ratio(const std::vector<StalenessProbe>& probes,
                                                const std::vector<SimTime>& omniscient_gen_times,
                                                SimTime t_stale);

/// Number of omniscient records a recent_1h query issued at `issue` is
/// expected to contain.
std::int64_t due_records(const std::vector<SimTime>& omniscient_gen_times, SimTime issue,
                         SimTime t_stale);

// ---------------------------------------------------------------------------
// Edge SLO search

struct QueueObservation {
    double first_half_avg = 0.0;
    double second_half_avg = 0.0;
    std::int64_t drops = 0;
};

inline constexpr double kQueueGrowthTolerance = 1.05;

/// Second-half time-averaged queue length within 5% of the first half and
/// no overflow drops.
bool queue_stable(const QueueObservation& obs);

struct SloProbe {
    double scale = 0.0;
    bool stable = false;
    bool reused = false;  // taken from a prior probe log
};

struct SloSearchResult {
    bool ok = false;
    double min_scale = 0.0;
    std::vector<SloProbe> probes;
    std::string error;
};

/// Bisection over resource_scale in [scale_lo, scale_hi] until the bracket
/// is within `tol` relative to its lower end. Probes found in `prior` (by
/// exact scale) are reused instead of re-run.
SloSearchResult slo_search(const std::function<bool(double)>& is_stable, double scale_lo,
                           double scale_hi, double tol = 0.05,
                           const std::vector<SloProbe>& prior = {});

/// ceil(log2((hi - lo) / (lo * tol))) + 2.
std::int64_t slo_probe_bound(double scale_lo, double scale_hi, double tol);

// ---------------------------------------------------------------------------
// Request-rate calibration

struct CalibrationProbe {
    double rate = 0.0;
    double utilization = 0.0;
};

struct CalibrationResult {
    bool ok = false;
    double rate = 0.0;
    double utilization = 0.0;
    double max_utilization = 0.0;
    std::vector<CalibrationProbe> probes;
    std::string error;
};

/// Safeguarded secant search for the per-client request rate whose mean
/// cloud busy fraction lands within target +- tol. `utilization_at` must be
/// non-decreasing in the rate over [rate_lo, rate_hi].
CalibrationResult calibrate_request_rate(const std::function<double(double)>& utilization_at,
                                         double target, double tol, double rate_lo,
                                         double rate_hi, int max_probes = 40);

}  // namespace fogbench
