#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "fogbench/config.hpp"
#include "fogbench/metrics.hpp"
#include "fogbench/workload.hpp"

using namespace fogbench;

TEST(Percentile, NearestRankAgainstSortedIndex) {
    std::mt19937_64 rng(1);
    for (int n : {1, 2, 3, 10, 99, 100, 101, 1000}) {
        std::vector<SimTime> v(static_cast<std::size_t>(n));
        for (auto& x : v) x = static_cast<SimTime>(rng() % 100000);
        auto sorted = v;
        std::sort(sorted.begin(), sorted.end());
        for (int pct : {1, 25, 50, 90, 99, 100}) {
            // rank = ceil(pct * n / 100) in integers
            const int rank = std::max(1, (pct * n + 99) / 100);
            EXPECT_EQ(*percentile(v, pct), sorted[rank - 1]) << "n=" << n << " p=" << pct;
        }
    }
    EXPECT_FALSE(percentile({}, 50));
    EXPECT_THROW(percentile({1}, 0.0), std::invalid_argument);
}

TEST(Percentile, SummaryIsMonotone) {
    std::vector<SimTime> v;
    for (int i = 1; i <= 1000; ++i) v.push_back(i);
    const auto s = summarize(v);
    EXPECT_EQ(s.count, 1000);
    EXPECT_EQ(*s.p50, 500);
    EXPECT_EQ(*s.p90, 900);
    EXPECT_EQ(*s.p99, 990);
    EXPECT_EQ(*s.max, 1000);
    EXPECT_DOUBLE_EQ(*s.mean, 500.5);
}

TEST(Offset, SumsJitterFreePropagationOfThreeLinks) {
    const RunConfig cfg = default_config();
    for (const auto& site : cfg.topology.sites) {
        const SimTime expect =
            ms_to_ns(site.sensor_distance_km * site.sensor_link.delay_per_km_ms) +
            ms_to_ns(site.uplink_distance_km * site.uplink.delay_per_km_ms) +
            ms_to_ns(cfg.topology.onprem_cloud_distance_km * cfg.topology.onprem_cloud_link.delay_per_km_ms);
        EXPECT_NEAR(propagation_offset(cfg.topology, site.site_id), expect, 2);
    }
    EXPECT_THROW(propagation_offset(cfg.topology, 12345), ConfigError);
}

TEST(Staleness, ViolationWhenDueRecordMissing) {
    // omniscient records every second for two hours
    std::vector<SimTime> gen;
    for (int s = 0; s < 7200; ++s) gen.push_back(seconds_to_ns(s));
    const SimTime t_stale = seconds_to_ns(5);
    const SimTime issue = seconds_to_ns(7000);
    // due: gen_time in [issue - 1 h, issue - 5 s] -> seconds 3400..6995
    EXPECT_EQ(due_records(gen, issue, t_stale), 3596);
    std::vector<StalenessProbe> probes{{issue, 3596}, {issue, 3595}, {issue, 4000}};
    EXPECT_DOUBLE_EQ(*staleness_violation_ratio(probes, gen, t_stale), 1.0 / 3.0);
    EXPECT_FALSE(staleness_violation_ratio({}, gen, t_stale));
    // threshold beyond the hour: nothing is due
    EXPECT_EQ(due_records(gen, issue, 2 * kQueryInterval), 0);
}

TEST(Slo, FindsThresholdWithinToleranceAndBound) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 500; ++trial) {
        const double lo = 0.1 + u(rng), hi = lo * (1.5 + 20 * u(rng));
        const double tol = 0.01 + 0.1 * u(rng);
        const double threshold = lo + (hi - lo) * u(rng);
        int calls = 0;
        const auto res = slo_search(
            [&](double s) {
                ++calls;
                return s >= threshold;
            },
            lo, hi, tol);
        ASSERT_TRUE(res.ok) << res.error;
        EXPECT_GE(res.min_scale, threshold);
        EXPECT_LE(res.min_scale, std::max(lo, threshold * (1 + tol)) + 1e-12);
        EXPECT_LE(calls, slo_probe_bound(lo, hi, tol));
    }
}

TEST(Slo, EdgeOutcomes) {
    auto r = slo_search([](double) { return false; }, 0.5, 2.0, 0.05);
    EXPECT_FALSE(r.ok);
    EXPECT_NE(r.error.find("scale_hi"), std::string::npos);
    r = slo_search([](double) { return true; }, 0.5, 2.0, 0.05);
    EXPECT_TRUE(r.ok);
    EXPECT_EQ(r.min_scale, 0.5);
    // a band of stability below the threshold that bisection never visits is not detected
    r = slo_search([](double s) { return s > 2.0 || (s > 0.6 && s < 0.7); }, 0.5, 4.0, 0.05);
    EXPECT_TRUE(r.ok);
    EXPECT_GT(r.min_scale, 2.0);
    EXPECT_FALSE(slo_search([](double) { return true; }, 2.0, 1.0).ok);
}

TEST(Slo, PriorProbesAreReused) {
    std::vector<double> seen;
    auto stable = [&](double s) {
        seen.push_back(s);
        return s >= 1.0;
    };
    const auto first = slo_search(stable, 0.5, 2.0, 0.05);
    const std::size_t first_calls = seen.size();
    // resume with the first half of the log only
    std::vector<SloProbe> prior(first.probes.begin(), first.probes.begin() + first.probes.size() / 2);
    seen.clear();
    const auto second = slo_search(stable, 0.5, 2.0, 0.05, prior);
    EXPECT_EQ(second.min_scale, first.min_scale);
    EXPECT_EQ(seen.size(), first_calls - prior.size());
    for (std::size_t i = 0; i < prior.size(); ++i) EXPECT_TRUE(second.probes[i].reused);
}

TEST(Calibration, LinearUtilizationSolvesDirectly) {
    auto util = [](double rate) { return std::min(1.0, 0.013 * rate); };
    const auto res = calibrate_request_rate(util, 0.6, 0.001, 1.0, 100.0);
    ASSERT_TRUE(res.ok) << res.error;
    EXPECT_NEAR(res.utilization, 0.6, 0.001);
    EXPECT_NEAR(res.rate, 0.6 / 0.013, 0.1);
    EXPECT_LE(res.probes.size(), 6u);
}

TEST(Calibration, SaturatingCurveAndFailures) {
    auto util = [](double rate) { return 1.0 - std::exp(-rate / 30.0); };
    const auto res = calibrate_request_rate(util, 0.8, 0.005, 0.1, 1000.0);
    ASSERT_TRUE(res.ok) << res.error;
    EXPECT_NEAR(res.utilization, 0.8, 0.005);

    const auto low = calibrate_request_rate([](double) { return 0.1; }, 0.5, 0.01, 1.0, 10.0);
    EXPECT_FALSE(low.ok);
    EXPECT_DOUBLE_EQ(low.max_utilization, 0.1);
    EXPECT_FALSE(calibrate_request_rate([](double) { return 0.9; }, 0.5, 0.01, 1.0, 10.0).ok);

    EXPECT_THROW(calibrate_request_rate(util, 0.0, 0.01, 1, 2), InvalidParameter);
    EXPECT_THROW(calibrate_request_rate(util, 1.0, 0.01, 1, 2), InvalidParameter);
    EXPECT_THROW(calibrate_request_rate(util, 0.5, 0.01, 2, 1), InvalidParameter);
}

TEST(Calibration, SaturatedCeilingDoesNotStall) {
    // utilization pinned at 1 over most of the bracket
    auto util = [](double rate) { return std::min(1.0, 0.8 * rate); };
    const auto res = calibrate_request_rate(util, 0.8, 0.02, 0.01, 100.0);
    ASSERT_TRUE(res.ok) << res.error;
    EXPECT_NEAR(res.rate, 1.0, 0.03);
    EXPECT_LE(res.probes.size(), 12u);
}
