#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <vector>

#include "fogbench/model.hpp"

using namespace fogbench;

namespace {

// P[X > bound] by visiting every subset of n Bernoulli(p) sensors.
long double enumerate_tail(int n, std::int64_t bound, double p) {
    std::vector<long double> weight(static_cast<std::size_t>(n) + 1);
    for (int k = 0; k <= n; ++k) {
        weight[k] = std::pow(static_cast<long double>(p), k) *
                    std::pow(1.0L - static_cast<long double>(p), n - k);
    }
    long double total = 0.0L;
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
        const int k = std::popcount(mask);
        if (k > bound) total += weight[k];
    }
    return total;
}

}  // namespace

TEST(QuorumBound, IntegerProductsAreNotRoundedUp) {
    EXPECT_EQ(quorum_bound(300, 0.2), 60);
    EXPECT_EQ(quorum_bound(30, 0.2), 6);
    EXPECT_EQ(quorum_bound(10, 0.25), 3);
    EXPECT_EQ(quorum_bound(7, 0.5), 4);
    EXPECT_EQ(quorum_bound(1, 0.0), 0);
}

TEST(QuorumProbability, MatchesSubsetEnumerationSmallN) {
    // y as exact fractions so the oracle's ceiling is integer arithmetic
    const std::pair<int, int> ys[] = {{1, 10}, {1, 4}, {1, 2}};
    for (int n = 1; n <= 12; ++n) {
        for (auto [a, b] : ys) {
            const std::int64_t bound = (n * a + b - 1) / b;
            for (double p : {0.1, 0.3, 0.7}) {
                const double y = static_cast<double>(a) / b;
                EXPECT_NEAR(quorum_probability(n, y, p), static_cast<double>(enumerate_tail(n, bound, p)),
                            1e-12)
                    << "n=" << n << " y=" << y << " p=" << p;
            }
        }
    }
}

TEST(QuorumProbability, Edges) {
    EXPECT_EQ(quorum_probability(300, 0.2, 0.0), 0.0);
    EXPECT_NEAR(quorum_probability(300, 0.2, 1.0), 1.0, 1e-15);
    // all sensors is never more than all sensors
    EXPECT_EQ(quorum_probability(10, 1.0, 0.9), 0.0);
    // a small y still needs one more than ceil(n * y) = 1
    EXPECT_NEAR(quorum_probability(5, 0.01, 0.5), 1.0 - std::pow(0.5, 5) - 5 * std::pow(0.5, 5), 1e-15);
}

TEST(QuorumProbability, LargeNStaysFinite) {
    const double tiny = quorum_probability(100000, 0.5, 0.1);
    EXPECT_GE(tiny, 0.0);
    EXPECT_LT(tiny, 1e-300);
    const double q = quorum_probability(300, 0.2, 0.15);
    EXPECT_GT(q, 0.0);
    EXPECT_LT(q, 0.05);
}

TEST(QuorumProbability, RejectsBadDomain) {
    EXPECT_THROW(quorum_probability(0, 0.2, 0.1), InvalidParameter);
    EXPECT_THROW(quorum_probability(10, 0.2, -0.1), InvalidParameter);
    EXPECT_THROW(quorum_probability(10, 0.2, 1.5), InvalidParameter);
    EXPECT_THROW(quorum_probability(10, 1.2, 0.5), InvalidParameter);
    EXPECT_THROW(quorum_probability(10, 0.0, 0.5), InvalidParameter);
}

TEST(RateModel, DefaultDerivedValues) {
    const WorkloadParams w;
    EXPECT_EQ(sensor_raw_rate(w), 19200.0);
    EXPECT_NEAR(mean_sensor_gateway_bandwidth(w), 149.5e3, 149.5e3 * 0.01);
    EXPECT_NEAR(edge_ingress_rate(w), 44.84e6, 44.84e6 * 0.01);
}

TEST(RateModel, NoExceedancesLeavesOnlyAggregates) {
    WorkloadParams w;
    w.exceed_prob = 0.0;
    EXPECT_DOUBLE_EQ(mean_sensor_gateway_bandwidth(w), 192.0 * 100.0 / 25.0);
}

TEST(RateModel, BandwidthIsAggregatePlusDumpTerm) {
    WorkloadParams w;
    w.n_sensors = 30;
    const double q = quorum_probability(30, 0.2, 0.15);
    EXPECT_NEAR(mean_sensor_gateway_bandwidth(w), 768.0 + q * 192.0 * 1000.0 * 100.0, 1e-6);
    EXPECT_NEAR(edge_ingress_rate(w), 30 * mean_sensor_gateway_bandwidth(w), 1e-6);
}

TEST(RateModel, DerivedRateSummary) {
    const RateSummary r = derived_rates(WorkloadParams{}, 6);
    EXPECT_DOUBLE_EQ(r.aggregate_rate_per_sensor_hz, 4.0);
    EXPECT_DOUBLE_EQ(r.aggregate_rate_per_site_hz, 1200.0);
    EXPECT_DOUBLE_EQ(r.total_insert_rate_hz, 7200.0);
    EXPECT_DOUBLE_EQ(r.query_rate_hz, 100.0);
    EXPECT_NEAR(r.recent_rate_hz + r.random_rate_hz + r.scan_rate_hz, 100.0, 1e-9);
}

TEST(WorkloadValidation, NamesTheField) {
    WorkloadParams w;
    w.q_recent = 0.4;  // mix sums to 0.9
    try {
        validate(w);
        FAIL() << "expected InvalidParameter";
    } catch (const InvalidParameter& e) {
        EXPECT_NE(std::string(e.what()).find("q_"), std::string::npos) << e.what();
    }
    w = WorkloadParams{};
    w.exceed_prob = 1.2;
    EXPECT_THROW(validate(w), InvalidParameter);
    w = WorkloadParams{};
    w.n_agg = 0;
    EXPECT_THROW(validate(w), InvalidParameter);
    w = WorkloadParams{};
    w.sampling_rate_hz = 0;
    EXPECT_THROW(validate(w), InvalidParameter);
}

TEST(Compute, EffectiveCapacitiesScale) {
    ComputeSpec s = default_compute(ComponentClass::gateway);
    s.resource_scale = 0.5;
    EXPECT_DOUBLE_EQ(s.effective_cores(), 2.0);
    EXPECT_DOUBLE_EQ(s.effective_mem_bytes(), 2e9);
    s.resource_scale = 0.0;
    EXPECT_THROW(validate(s), InvalidParameter);
}

TEST(Links, TableDefaultsAreValid) {
    for (auto t : {LinkType::lorawan, LinkType::lte_m, LinkType::fiber_1g, LinkType::fiber_10g}) {
        EXPECT_NO_THROW(validate(default_link(t)));
        EXPECT_EQ(link_type_from_string(to_string(t)), t);
    }
    EXPECT_EQ(default_link(LinkType::lorawan).bandwidth_bps, 22e3);
    LinkSpec bad = default_link(LinkType::fiber_1g);
    bad.loss_rate = 0.6;
    bad.corrupt_rate = 0.5;
    EXPECT_THROW(validate(bad), InvalidParameter);
    bad = default_link(LinkType::fiber_1g);
    bad.jitter_frac = 0.5;
    EXPECT_THROW(validate(bad), InvalidParameter);
}

TEST(Geo, HaversineKnownDistances) {
    // quarter meridian
    EXPECT_NEAR(great_circle_km({0, 0}, {90, 0}), 6371.0 * M_PI / 2, 1e-6);
    EXPECT_NEAR(great_circle_km({10, 20}, {10, 20}), 0.0, 1e-9);
    const double d = great_circle_km(hilo_location(), cloud_location());
    EXPECT_GT(d, 3700);
    EXPECT_LT(d, 4000);
}

TEST(Topology, DefaultHasSixSitesWithPaths) {
    const Topology t = default_topology(3);
    ASSERT_EQ(t.sites.size(), 6u);
    EXPECT_EQ(t.cloud.size(), 3u);
    EXPECT_NO_THROW(validate(t, 3));
    EXPECT_THROW(validate(t, 2), InvalidParameter);
    for (const auto& s : t.sites) {
        EXPECT_TRUE(t.has_site(s.site_id));
        EXPECT_EQ(s.sensor_link.link_type, LinkType::lorawan);
        EXPECT_GT(s.uplink_distance_km, 0.0);
    }
    EXPECT_FALSE(t.has_site(99));
}
