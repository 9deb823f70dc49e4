#include <gtest/gtest.h>

#include <random>
#include <thread>

#include "fogbench/adapter.hpp"
#include "fogbench/wire.hpp"

using namespace fogbench;
using nlohmann::json;

namespace {

AnnotatedRecord record(int site, int sensor, std::int64_t seq, SimTime gen, double p) {
    AnnotatedRecord a;
    a.record.site_id = site;
    a.record.sensor_id = sensor;
    a.record.window_seq = seq;
    a.record.gen_time = gen;
    a.record.channel_means = {0.25, -1.5, 3.0, 0.0};
    a.record.size_bits = 320;
    a.event_probability = p;
    a.inference_time = gen + 7;
    return a;
}

}  // namespace

TEST(Wire, FrameRoundTripAndLayout) {
    const wire::Frame f{wire::Opcode::query, R"({"a":1})"};
    const std::string bytes = wire::encode(f);
    ASSERT_EQ(bytes.size(), 4u + 1u + 7u);
    EXPECT_EQ(bytes.substr(0, 4), std::string("\0\0\0\x08", 4));
    EXPECT_EQ(static_cast<unsigned char>(bytes[4]), 0x02);
    const auto back = wire::decode(bytes);
    EXPECT_EQ(back.opcode, f.opcode);
    EXPECT_EQ(back.body, f.body);
}

TEST(Wire, MalformedFramesAreRejected) {
    EXPECT_THROW(wire::decode("abc"), wire::ProtocolError);
    EXPECT_THROW(wire::decode(std::string("\0\0\0\0\x01", 5)), wire::ProtocolError);
    EXPECT_THROW(wire::decode(std::string("\0\0\0\x05\x01{}", 7)), wire::ProtocolError);
    EXPECT_THROW(wire::decode(std::string("\0\0\0\x03\x09{}", 7)), wire::ProtocolError);
    EXPECT_THROW(wire::parse_body("[1,2]"), wire::ProtocolError);
    EXPECT_THROW(wire::parse_body("{oops"), wire::ProtocolError);
    EXPECT_THROW(wire::annotated_from_json(json{{"site_id", 1}}), wire::ProtocolError);
    EXPECT_THROW(wire::query_from_json(json{{"query_id", "x"}}), wire::ProtocolError);
}

TEST(Wire, BodiesRoundTrip) {
    const auto a = record(3, 4, 5, 123456789, 0.375);
    const auto a2 = wire::annotated_from_json(wire::to_json(a));
    EXPECT_EQ(a2.record.window_seq, 5);
    EXPECT_EQ(a2.record.channel_means, a.record.channel_means);
    EXPECT_EQ(a2.event_probability, 0.375);
    EXPECT_EQ(a2.inference_time, a.inference_time);

    Query q;
    q.query_id = (7ull << 32) | 9;
    q.kind = QueryKind::random_1h;
    q.issue_time = 5000;
    q.interval = Interval{100, 200};
    EXPECT_EQ(wire::query_from_json(wire::to_json(q)), q);
    Query s;
    s.kind = QueryKind::scan_filter;
    s.threshold = 0.9;
    s.lookback = 60;
    EXPECT_EQ(wire::query_from_json(wire::to_json(s)), s);

    QueryResult r;
    r.query_id = 11;
    r.count = 1;
    r.records = {{{1, 2, 3}, 400, 0.5}};
    r.shares = {{0, 10, 1}, {1, 4, 0}};
    const auto r2 = wire::result_from_json(wire::to_json(r));
    EXPECT_EQ(r2.records, r.records);
    ASSERT_EQ(r2.shares.size(), 2u);
    EXPECT_EQ(r2.shares[0].touched, 10);
    EXPECT_EQ(r2.shares[1].instance, 1);

    EventReport e;
    e.report_id = 4;
    e.site_id = 2;
    e.dumps = 30;
    e.size_bits = 999;
    const auto e2 = wire::event_report_from_json(wire::to_json(e));
    EXPECT_EQ(e2.report_id, 4u);
    EXPECT_EQ(e2.size_bits, 999);
}

TEST(Endpoint, Parse) {
    const auto ep = parse_endpoint("10.0.0.2:9000");
    EXPECT_EQ(ep.host, "10.0.0.2");
    EXPECT_EQ(ep.port, 9000);
    EXPECT_ANY_THROW(parse_endpoint("nohost"));
    EXPECT_ANY_THROW(parse_endpoint("h:notaport"));
}

TEST(Adapter, RemoteMatchesInProcessOverLoopback) {
    const std::vector<int> sites{0, 1, 2, 3};
    TimeSeriesStore local(2, sites, 1e12), served(2, sites, 1e12);
    SutServer server(served, "127.0.0.1", 0);
    server.start();
    ReferenceSut ref(local);
    RemoteSut remote({"127.0.0.1", server.port()}, 3, 5.0, {false, true});

    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 2000; ++i) {
        const auto a = record(i % 4, i % 13, i, static_cast<SimTime>(i) * 1000, u(rng));
        ASSERT_TRUE(ref.ingest(a, 0).ok());
        ASSERT_TRUE(remote.ingest(a, 0).ok());
    }
    for (int i = 0; i < 50; ++i) {
        Query q;
        q.query_id = static_cast<std::uint64_t>(i);
        q.issue_time = 2'000'000;
        if (i % 2 == 0) {
            q.kind = QueryKind::random_1h;
            const SimTime a = static_cast<SimTime>(u(rng) * 1'500'000);
            q.interval = Interval{a, a + 400'000};
        } else {
            q.kind = QueryKind::scan_filter;
            q.threshold = u(rng);
        }
        const QueryOptions opt{true, SimTime{1'000'000}};
        const auto a = ref.query(q, opt);
        const auto b = remote.query(q, opt);
        ASSERT_TRUE(a.ok()) << a.message;
        ASSERT_TRUE(b.ok()) << b.message;
        EXPECT_EQ(a.result.count, b.result.count);
        EXPECT_EQ(a.result.records, b.result.records);
        EXPECT_EQ(a.result.due_count, b.result.due_count);
        ASSERT_EQ(a.result.shares.size(), b.result.shares.size());
        for (std::size_t k = 0; k < a.result.shares.size(); ++k) {
            EXPECT_EQ(a.result.shares[k].touched, b.result.shares[k].touched);
        }
    }
    // event reports are refused locally when not advertised
    EXPECT_EQ(remote.ingest_event(EventReport{}, 0).error, SutError::unsupported);
    EXPECT_EQ(remote.stats().query_failures, 0);
    server.stop();
}

TEST(Adapter, ConcurrentClientsShareThePool) {
    TimeSeriesStore served(1, {0}, 1e12);
    SutServer server(served, "127.0.0.1", 0);
    server.start();
    RemoteSut remote({"127.0.0.1", server.port()}, 2, 5.0, {});
    std::vector<std::thread> threads;
    for (int t = 0; t < 6; ++t) {
        threads.emplace_back([&, t] {
            for (int i = 0; i < 100; ++i) {
                EXPECT_TRUE(remote.ingest(record(0, t, i, i, 0.0), 0).ok());
            }
        });
    }
    for (auto& th : threads) th.join();
    EXPECT_EQ(served.size(), 600);
    server.stop();
}

TEST(Adapter, ServerAnswersBadBodiesWithError) {
    TimeSeriesStore served(1, {0}, 1e12);
    SutServer server(served, "127.0.0.1", 0);
    server.start();
    Connection c = Connection::open({"127.0.0.1", server.port()}, 2.0);
    const auto reply = c.request({wire::Opcode::query, "{broken"});
    EXPECT_EQ(reply.opcode, wire::Opcode::error);
    const auto reply2 = c.request({wire::Opcode::insert, "{}"});
    EXPECT_EQ(reply2.opcode, wire::Opcode::error);
    // connection stays usable after an error reply
    const auto ok = c.request({wire::Opcode::insert, json{{"record", wire::to_json(record(0, 0, 0, 0, 0))}}.dump()});
    EXPECT_EQ(ok.opcode, wire::Opcode::ack);
    server.stop();
}

TEST(Adapter, UnreachableEndpointFailsFast) {
    int port;
    {
        TimeSeriesStore s(1, {0}, 1e9);
        SutServer probe(s, "127.0.0.1", 0);
        probe.start();
        port = probe.port();
        probe.stop();
    }
    EXPECT_THROW(RemoteSut({"127.0.0.1", port}, 2, 0.5, {}), SutUnreachable);
}
