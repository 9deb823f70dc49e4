#include "fogbench/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fogbench/config.hpp"
#include "fogbench/link.hpp"
#include "fogbench/workload.hpp"

namespace fogbench {

std::string_view to_string(SampleKind kind) {
    switch (kind) {
        case SampleKind::e2e_insert: return "e2e_insert";
        case SampleKind::event_report: return "event_report";
        case SampleKind::query: return "query";
    }
    return "?";
}

std::optional<SimTime> percentile_sorted(const std::vector<SimTime>& sorted, double percent) {
    if (sorted.empty()) return std::nullopt;
    if (!(percent > 0.0 && percent <= 100.0)) {
        throw std::invalid_argument("percentile: percent must be in (0, 100]");
    }
    const double exact = percent / 100.0 * static_cast<double>(sorted.size());
    const double nearest = std::round(exact);
    const double rank = std::abs(exact - nearest) <= 1e-9 * std::max(1.0, exact) ? nearest
                                                                                  : std::ceil(exact);
    const auto idx = static_cast<std::size_t>(std::max(1.0, rank)) - 1;
    return sorted[std::min(idx, sorted.size() - 1)];
}

std::optional<SimTime> percentile(std::vector<SimTime> samples, double percent) {
    std::sort(samples.begin(), samples.end());
    return percentile_sorted(samples, percent);
}

LatencySummary summarize(std::vector<SimTime> samples) {
    LatencySummary s;
    s.count = static_cast<std::int64_t>(samples.size());
    if (samples.empty()) return s;
    std::sort(samples.begin(), samples.end());
    s.p50 = percentile_sorted(samples, 50);
    s.p90 = percentile_sorted(samples, 90);
    s.p99 = percentile_sorted(samples, 99);
    s.max = samples.back();
    long double total = 0;
    for (SimTime v : samples) total += v;
    s.mean = static_cast<double>(total / static_cast<long double>(samples.size()));
    return s;
}

SimTime propagation_offset(const Topology& topology, int site_id) {
    if (!topology.has_site(site_id)) {
        throw ConfigError("propagation_offset: site " + std::to_string(site_id) +
                          " has no path to the cloud");
    }
    const Site& s = topology.site(site_id);
    return propagation_delay(s.sensor_link, s.sensor_distance_km) +
           propagation_delay(s.uplink, s.uplink_distance_km) +
           propagation_delay(topology.onprem_cloud_link, topology.onprem_cloud_distance_km);
}

std::int64_t due_records(const std::vector<SimTime>& gen_times, SimTime issue, SimTime t_stale) {
    const SimTime lo = issue - kQueryInterval;
    const SimTime hi = issue - t_stale;
    if (hi < lo) return 0;
    const auto first = std::lower_bound(gen_times.begin(), gen_times.end(), lo);
    const auto last = std::upper_bound(gen_times.begin(), gen_times.end(), hi);
    return last > first ? last - first : 0;
}

std::optional<double> staleness_violation_ratio(const std::vector<StalenessProbe>& probes,
                                                const std::vector<SimTime>& gen_times,
                                                SimTime t_stale) {
    if (probes.empty()) return std::nullopt;
    std::int64_t violations = 0;
    for (const auto& p : probes) {
        if (due_records(gen_times, p.issue_time, t_stale) > p.due_in_result) ++violations;
    }
    return static_cast<double>(violations) / static_cast<double>(probes.size());
}

bool queue_stable(const QueueObservation& obs) {
    return obs.drops == 0 && obs.second_half_avg <= kQueueGrowthTolerance * obs.first_half_avg;
}

std::int64_t slo_probe_bound(double lo, double hi, double tol) {
    if (hi <= lo) return 2;
    return static_cast<std::int64_t>(std::ceil(std::log2((hi - lo) / (lo * tol)))) + 2;
}

SloSearchResult slo_search(const std::function<bool(double)>& is_stable, double lo, double hi,
                           double tol, const std::vector<SloProbe>& prior) {
    SloSearchResult result;
    if (!(lo > 0.0 && hi > lo)) {
        result.error = "slo_search: require 0 < scale_lo < scale_hi";
        return result;
    }
    if (!(tol > 0.0)) {
        result.error = "slo_search: tolerance must be > 0";
        return result;
    }

    auto probe = [&](double scale) {
        for (const auto& p : prior) {
            if (p.scale == scale) {
                result.probes.push_back({scale, p.stable, true});
                return p.stable;
            }
        }
        const bool stable = is_stable(scale);
        result.probes.push_back({scale, stable, false});
        return stable;
    };
    auto monotone = [&] {
        double min_stable = INFINITY;
        double max_unstable = -INFINITY;
        for (const auto& p : result.probes) {
            if (p.stable) {
                min_stable = std::min(min_stable, p.scale);
            } else {
                max_unstable = std::max(max_unstable, p.scale);
            }
        }
        return max_unstable < min_stable;
    };

    if (!probe(hi)) {
        result.error = "slo_search: unstable at scale_hi";
        return result;
    }
    if (probe(lo)) {
        result.ok = true;
        result.min_scale = lo;
        return result;
    }
    while (hi - lo > tol * lo) {
        const double mid = 0.5 * (lo + hi);
        if (probe(mid)) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    if (!monotone()) {
        result.error = "slo_search: non-monotone stability observations";
        return result;
    }
    result.ok = true;
    result.min_scale = hi;
    return result;
}

CalibrationResult calibrate_request_rate(const std::function<double(double)>& utilization_at,
                                         double target, double tol, double rate_lo, double rate_hi,
                                         int max_probes) {
    CalibrationResult result;
    if (!(target > 0.0 && target < 1.0)) {
        throw InvalidParameter("calibrate: target utilization must be in (0, 1)");
    }
    if (!(tol > 0.0)) throw InvalidParameter("calibrate: tolerance must be > 0");
    if (!(rate_lo > 0.0 && rate_hi > rate_lo)) {
        throw InvalidParameter("calibrate: require 0 < rate_lo < rate_hi");
    }

    auto measure = [&](double rate) {
        const double u = utilization_at(rate);
        result.probes.push_back({rate, u});
        result.max_utilization = std::max(result.max_utilization, u);
        return u;
    };
    auto accept = [&](double rate, double u) {
        result.ok = true;
        result.rate = rate;
        result.utilization = u;
    };

    double r_hi = rate_hi;
    double u_hi = measure(r_hi);
    if (std::abs(u_hi - target) <= tol) {
        accept(r_hi, u_hi);
        return result;
    }
    if (u_hi < target) {
        result.error = "calibrate: target unreachable below rate ceiling (max utilization " +
                       std::to_string(result.max_utilization) + ")";
        return result;
    }
    double r_lo = rate_lo;
    double u_lo = measure(r_lo);
    if (std::abs(u_lo - target) <= tol) {
        accept(r_lo, u_lo);
        return result;
    }
    if (u_lo > target) {
        result.error = "calibrate: utilization above target even at the lowest rate";
        return result;
    }

    // Regula falsi on g = u - target with the Illinois tweak: an endpoint
    // retained twice in a row has its g halved, so a saturated end of the
    // bracket cannot stall progress.
    double g_lo = u_lo - target;
    double g_hi = u_hi - target;
    int side = 0;  // -1: lo moved last, +1: hi moved last
    while (static_cast<int>(result.probes.size()) < max_probes) {
        double r = r_lo - g_lo * (r_hi - r_lo) / (g_hi - g_lo);
        const double margin = 1e-3 * (r_hi - r_lo);
        if (!(r > r_lo + margin && r < r_hi - margin)) r = 0.5 * (r_lo + r_hi);
        const double u = measure(r);
        if (std::abs(u - target) <= tol) {
            accept(r, u);
            return result;
        }
        if (u < target) {
            r_lo = r;
            g_lo = u - target;
            if (side == -1) g_hi *= 0.5;
            side = -1;
        } else {
            r_hi = r;
            g_hi = u - target;
            if (side == +1) g_lo *= 0.5;
            side = +1;
        }
    }
    result.error = "calibrate: no convergence within probe budget";
    return result;
}

}  // namespace fogbench
