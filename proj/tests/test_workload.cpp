#include <gtest/gtest.h>

#include <array>
#include <cmath>

#include "fogbench/workload.hpp"

using namespace fogbench;

TEST(SensorBuffer, KeepsNewestInOrder) {
    SensorBuffer b(4);
    for (int i = 0; i < 10; ++i) {
        SensorReading r;
        r.seq = i;
        b.push(r);
    }
    ASSERT_EQ(b.size(), 4u);
    const auto snap = b.snapshot();
    for (int i = 0; i < 4; ++i) EXPECT_EQ(snap[i].seq, 6 + i);
    EXPECT_THROW(b.at(4), std::out_of_range);
    EXPECT_THROW(SensorBuffer(0), std::invalid_argument);
}

TEST(Aggregation, MeansMatchRecomputationFromReadings) {
    WorkloadParams w;
    w.channels = 3;
    w.n_agg = 7;
    w.buffer_size = 64;
    SensorState s(2, 5, w);
    Rng rng(17);
    std::vector<SensorReading> window;
    int emitted = 0;
    for (int i = 0; i < 700; ++i) {
        const auto r = next_reading(s, static_cast<SimTime>(i) * 10'000'000, rng);
        window.push_back(r);
        const auto agg = maybe_aggregate(s, r);
        if (!agg) continue;
        ASSERT_EQ(window.size(), 7u);
        EXPECT_EQ(agg->window_seq, emitted);
        EXPECT_EQ(agg->gen_time, window.front().gen_time);
        EXPECT_EQ(agg->size_bits, w.resolution_bits + kRecordHeaderBits);
        for (int c = 0; c < 3; ++c) {
            long double sum = 0;
            for (const auto& x : window) sum += static_cast<long double>(x.channels[c]) / kSampleScale;
            EXPECT_NEAR(agg->channel_means[c], static_cast<double>(sum / 7), 1e-12);
        }
        window.clear();
        ++emitted;
    }
    EXPECT_EQ(emitted, 100);
}

TEST(Readings, ExceedFractionAndOffset) {
    WorkloadParams w;
    w.exceed_prob = 0.15;
    SensorState s(0, 0, w);
    Rng rng(3);
    const int n = 200000;
    int exceed = 0;
    double mean_exceed = 0, mean_normal = 0;
    for (int i = 0; i < n; ++i) {
        const auto r = next_reading(s, i, rng);
        const double v = dequantize(r.channels[0]);
        if (r.exceeds) {
            ++exceed;
            mean_exceed += v;
        } else {
            mean_normal += v;
        }
    }
    const double frac = static_cast<double>(exceed) / n;
    EXPECT_NEAR(frac, 0.15, 4 * std::sqrt(0.15 * 0.85 / n));
    EXPECT_NEAR(mean_exceed / exceed, kExceedOffsetSigma, 0.05);
    EXPECT_NEAR(mean_normal / (n - exceed), 0.0, 0.05);
}

TEST(Readings, NeverExceedAtZeroProbability) {
    WorkloadParams w;
    w.exceed_prob = 0.0;
    SensorState s(0, 0, w);
    Rng rng(3);
    for (int i = 0; i < 10000; ++i) EXPECT_FALSE(next_reading(s, i, rng).exceeds);
}

TEST(Dump, CarriesWholeBufferNonDestructively) {
    WorkloadParams w;
    w.buffer_size = 50;
    SensorState s(1, 9, w);
    Rng rng(1);
    for (int i = 0; i < 30; ++i) next_reading(s, i, rng);
    EXPECT_EQ(dump_payload_bits(s), 30 * w.resolution_bits);
    for (int i = 30; i < 80; ++i) next_reading(s, i, rng);
    const auto d = dump_buffer(s);
    EXPECT_EQ(d.readings.size(), 50u);
    EXPECT_EQ(d.readings.front().seq, 30);
    EXPECT_EQ(d.payload_bits, 50 * w.resolution_bits);
    EXPECT_EQ(d.size_bits, d.payload_bits + kRecordHeaderBits);
    EXPECT_EQ(s.buffer.size(), 50u);
}

TEST(Queries, MixFollowsShares) {
    WorkloadParams w;
    w.q_recent = 0.5;
    w.q_random = 0.3;
    w.q_scan = 0.2;
    ClientState c;
    Rng rng(8);
    std::array<int, 3> counts{};
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const auto q = next_query(c, w, rng, 10 * kQueryInterval);
        ++counts[static_cast<int>(q.kind)];
    }
    EXPECT_NEAR(counts[0] / double(n), 0.5, 0.01);
    EXPECT_NEAR(counts[1] / double(n), 0.3, 0.01);
    EXPECT_NEAR(counts[2] / double(n), 0.2, 0.01);
}

TEST(Queries, IntervalsStayInsideHistory) {
    WorkloadParams w;
    w.q_recent = 0.0;
    w.q_random = 1.0;
    w.q_scan = 0.0;
    ClientState c;
    c.client_id = 3;
    Rng rng(2);
    const SimTime start = 5 * kNanosPerSecond;
    for (SimTime now : {start + 10 * kNanosPerSecond, start + 3 * kQueryInterval}) {
        for (int i = 0; i < 2000; ++i) {
            const auto q = next_query(c, w, rng, now, start);
            ASSERT_TRUE(q.interval);
            EXPECT_GE(q.interval->start, start);
            EXPECT_LE(q.interval->end, now);
            EXPECT_LE(q.interval->end - q.interval->start, kQueryInterval);
            EXPECT_EQ(q.query_id >> 32, 3u);
        }
    }
}

TEST(Queries, RecentAndScanShapes) {
    WorkloadParams w;
    w.q_recent = 1.0;
    w.q_random = 0.0;
    w.q_scan = 0.0;
    ClientState c;
    Rng rng(2);
    const auto r = next_query(c, w, rng, 2 * kQueryInterval);
    EXPECT_EQ(r.kind, QueryKind::recent_1h);
    EXPECT_EQ(*r.interval, (Interval{kQueryInterval, 2 * kQueryInterval}));

    w.q_recent = 0.0;
    w.q_scan = 1.0;
    const auto s = next_query(c, w, rng, 2 * kQueryInterval);
    EXPECT_EQ(s.kind, QueryKind::scan_filter);
    EXPECT_FALSE(s.interval);
    ASSERT_TRUE(s.threshold);
    EXPECT_EQ(*s.threshold, w.scan_threshold);
    EXPECT_EQ(r.query_id + 1, s.query_id);

    EXPECT_EQ(query_kind_from_string(to_string(QueryKind::random_1h)), QueryKind::random_1h);
    EXPECT_THROW(query_kind_from_string("bogus"), std::invalid_argument);
}
