#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "fogbench/store.hpp"

using namespace fogbench;

namespace {

AnnotatedRecord make(int site, int sensor, std::int64_t seq, SimTime gen, double prob) {
    AnnotatedRecord a;
    a.record.site_id = site;
    a.record.sensor_id = sensor;
    a.record.window_seq = seq;
    a.record.gen_time = gen;
    a.record.size_bits = 256;
    a.event_probability = prob;
    return a;
}

bool sorted_less(const ResultRecord& a, const ResultRecord& b) {
    if (a.gen_time != b.gen_time) return a.gen_time < b.gen_time;
    return a.key < b.key;
}

// Brute force over a flat list of everything inserted.
std::vector<ResultRecord> oracle(const std::vector<ResultRecord>& all, const Query& q, double theta) {
    std::vector<ResultRecord> out;
    for (const auto& r : all) {
        bool hit;
        if (q.kind == QueryKind::scan_filter) {
            hit = r.event_probability > q.threshold.value_or(theta);
            if (q.lookback > 0) hit = hit && r.gen_time >= q.issue_time - q.lookback && r.gen_time < q.issue_time;
        } else {
            hit = q.interval->contains(r.gen_time);
        }
        if (hit) out.push_back(r);
    }
    std::sort(out.begin(), out.end(), sorted_less);
    return out;
}

}  // namespace

TEST(Store, QueriesMatchBruteForceOnRandomData) {
    std::mt19937_64 rng(21);
    std::uniform_int_distribution<SimTime> when(0, 1'000'000'000'000);
    std::uniform_real_distribution<double> prob(0.0, 1.0);
    TimeSeriesStore store(3, {0, 1, 2, 3, 4, 5}, 1e12, 0.9);
    std::vector<ResultRecord> all;
    for (int i = 0; i < 20000; ++i) {
        const int site = static_cast<int>(rng() % 6);
        const SimTime t = when(rng) / 1000 * 1000;  // some gen_time ties
        const double p = prob(rng);
        store.insert(make(site, i % 37, i, t, p), i);
        all.push_back({{site, i % 37, i}, t, p});
    }
    EXPECT_EQ(store.size(), 20000);

    std::uint64_t qid = 0;
    for (int i = 0; i < 300; ++i) {
        Query q;
        q.query_id = qid++;
        const int kind = i % 3;
        if (kind < 2) {
            q.kind = kind == 0 ? QueryKind::recent_1h : QueryKind::random_1h;
            const SimTime a = when(rng), span = when(rng) / 10;
            q.interval = Interval{a, a + span};
            q.issue_time = a + span;
        } else {
            q.kind = QueryKind::scan_filter;
            q.threshold = (i % 2 == 0) ? 0.9 : prob(rng);
            q.issue_time = when(rng);
            q.lookback = (i % 4 == 2) ? when(rng) / 3 : 0;
        }
        const auto expect = oracle(all, q, 0.9);
        const auto fast = store.query(q);
        const auto full = store.query(q, QueryOptions{true, std::nullopt});
        EXPECT_EQ(fast.count, static_cast<std::int64_t>(expect.size())) << i;
        EXPECT_EQ(full.records, expect) << i;
        EXPECT_EQ(digest(full.records), digest(expect));
        if (!expect.empty()) {
            ASSERT_TRUE(fast.newest_gen_time);
            EXPECT_EQ(*fast.newest_gen_time, expect.back().gen_time);
        } else {
            EXPECT_FALSE(fast.newest_gen_time);
        }
    }
}

TEST(Store, IndexedScanAgreesWithMaterializedScan) {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> prob(0.0, 1.0);
    TimeSeriesStore store(2, {10, 20, 30}, 1e12, 0.75);
    for (int i = 0; i < 5000; ++i) {
        // out-of-order gen_times exercise the running-count insert path
        const SimTime t = static_cast<SimTime>(i) * 1000 - static_cast<SimTime>(rng() % 50'000);
        store.insert(make(10 * (1 + i % 3), 0, i, t, prob(rng)), 0);
    }
    for (SimTime lookback : {SimTime{0}, SimTime{1'000'000}, SimTime{3'000'000}}) {
        Query q;
        q.kind = QueryKind::scan_filter;
        q.threshold = 0.75;
        q.issue_time = 4'000'000;
        q.lookback = lookback;
        const auto a = store.query(q);
        const auto b = store.query(q, QueryOptions{true, std::nullopt});
        EXPECT_EQ(a.count, static_cast<std::int64_t>(b.records.size()));
        EXPECT_EQ(a.newest_gen_time, b.newest_gen_time);
        EXPECT_EQ(a.count, b.count);
    }
}

TEST(Store, EvictsOldestPerInstanceAndKeepsCountsRight) {
    // each record is 32 bytes; 10 fit per instance
    TimeSeriesStore store(2, {0, 1}, 320.0, 0.5);
    std::int64_t evicted = 0;
    for (int i = 0; i < 30; ++i) {
        const auto ack = store.insert(make(i % 2, 0, i, i * 10, i % 3 == 0 ? 0.9 : 0.1), i);
        evicted += static_cast<std::int64_t>(ack.evicted.size());
    }
    EXPECT_EQ(store.size(0), 10);
    EXPECT_EQ(store.size(1), 10);
    EXPECT_EQ(evicted, 10);
    EXPECT_EQ(store.evictions(), 10);
    EXPECT_LE(store.stored_bytes(0), 320);

    // survivors are the newest ten of each site
    const auto c0 = store.contents(0);
    EXPECT_EQ(c0.front().key.window_seq, 10);
    Query q;
    q.kind = QueryKind::scan_filter;
    q.threshold = 0.5;
    q.issue_time = 1000;
    const auto fast = store.query(q);
    const auto full = store.query(q, QueryOptions{true, std::nullopt});
    EXPECT_EQ(fast.count, static_cast<std::int64_t>(full.records.size()));
    // i in [10, 30) with i % 3 == 0
    EXPECT_EQ(fast.count, 6);
}

TEST(Store, PartitionAndWatermarks) {
    TimeSeriesStore store(2, {5, 6, 7}, 1e9);
    EXPECT_EQ(store.instance_of(5), 0);
    EXPECT_EQ(store.instance_of(6), 1);
    EXPECT_EQ(store.instance_of(7), 0);
    EXPECT_THROW(store.instance_of(8), std::out_of_range);
    EXPECT_FALSE(store.watermark());
    store.insert(make(6, 0, 0, 500, 0.0), 0);
    store.insert(make(5, 0, 0, 300, 0.0), 0);
    EXPECT_EQ(store.watermark(), SimTime{500});
    EXPECT_EQ(store.watermark(0), SimTime{300});
    EXPECT_EQ(store.watermark(1), SimTime{500});
    EXPECT_THROW(TimeSeriesStore(0, {1}, 1e9), std::invalid_argument);
    EXPECT_THROW(TimeSeriesStore(1, {1, 1}, 1e9), std::invalid_argument);
}

TEST(Store, DueCountAndShares) {
    TimeSeriesStore store(2, {0, 1}, 1e9);
    for (int i = 0; i < 10; ++i) store.insert(make(i % 2, 0, i, i * 100, 0.0), 0);
    Query q;
    q.kind = QueryKind::recent_1h;
    q.interval = Interval{0, 1000};
    const auto r = store.query(q, QueryOptions{false, SimTime{450}});
    EXPECT_EQ(r.count, 10);
    EXPECT_EQ(r.due_count, 5);  // gen_time 0..400
    ASSERT_EQ(r.shares.size(), 2u);
    EXPECT_EQ(r.shares[0].touched + r.shares[1].touched, 10);
    EXPECT_EQ(r.served_by, (std::vector<int>{0, 1}));
}

TEST(Store, DigestIgnoresOrder) {
    std::vector<ResultRecord> a{{{1, 2, 3}, 0, 0.0}, {{4, 5, 6}, 1, 0.0}};
    auto b = a;
    std::swap(b[0], b[1]);
    EXPECT_EQ(digest(a), digest(b));
    b[0].key.window_seq = 7;
    EXPECT_NE(digest(a), digest(b));
}
