// Simulated run: sensors -> gateway -> on-premise inference -> cloud store,
// with query clients issuing open-loop requests against the store.

#include "fogbench/runner.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>

#include "fogbench/link.hpp"
#include "fogbench/node_queue.hpp"
#include "fogbench/services.hpp"
#include "fogbench/sim.hpp"
#include "fogbench/store.hpp"
#include "fogbench/workload.hpp"
#include "report.hpp"

namespace fogbench {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

Rng stream(std::uint64_t seed, std::uint64_t id) { return Rng(splitmix64(seed ^ splitmix64(id))); }

bool result_less(const ResultRecord& a, const ResultRecord& b) {
    if (a.gen_time != b.gen_time) return a.gen_time < b.gen_time;
    return a.key < b.key;
}

// trace node ids
constexpr int kGeneratorNode = 0;
constexpr int kGatewayNode = 1000;
constexpr int kOnpremNode = 2000;
constexpr int kCloudNode = 3000;
constexpr int kClientNode = 4000;
constexpr int kSensorNode = 1'000'000;

struct InFlight {
    AggregateRecord rec;
    SimTime created = 0;  // tick at which the aggregate was formed
    int site_index = 0;
};

struct SiteRuntime {
    const Site* spec = nullptr;
    std::vector<SensorState> sensors;
    std::vector<NodeQueue> sensor_nodes;
    std::vector<Link> up;    // sensor -> gateway
    std::vector<Link> down;  // gateway -> sensor
    Link uplink;             // gateway -> on-premise
    GatewayState gateway;
    NodeQueue gateway_node;
    SimTime offset = 0;        // aggregate path
    SimTime event_offset = 0;  // trigger down, dump up, then the aggregate path

    SiteRuntime(const Site& s, const RunConfig& cfg, const WorkloadParams& wl)
        : spec(&s),
          uplink(s.uplink, s.uplink_distance_km, cfg.transport),
          gateway(s.site_id, wl.n_sensors, wl.quorum_ratio),
          gateway_node("gateway/" + std::to_string(s.site_id), s.gateway_compute,
                       cfg.record_footprint_bytes) {
        const auto n = static_cast<std::size_t>(wl.n_sensors);
        sensors.reserve(n);
        sensor_nodes.reserve(n);
        up.reserve(n);
        down.reserve(n);
        for (std::size_t j = 0; j < n; ++j) {
            sensors.emplace_back(s.site_id, static_cast<int>(j), wl);
            sensor_nodes.emplace_back("sensor", s.sensor_compute, cfg.record_footprint_bytes);
            up.emplace_back(s.sensor_link, s.sensor_distance_km, cfg.transport);
            down.emplace_back(s.sensor_link, s.sensor_distance_km, cfg.transport);
        }
        offset = propagation_offset(cfg.topology, s.site_id);
        event_offset = offset + propagation_delay(s.sensor_link, s.sensor_distance_km);
    }
};

/// Brute-force reference for query results: every successfully ingested
/// record, minus evictions reported by the store.
class Oracle {
public:
    void add(const AnnotatedRecord& a) {
        const RecordKey key{a.record.site_id, a.record.sensor_id, a.record.window_seq};
        index_[key] = entries_.size();
        entries_.push_back({{key, a.record.gen_time, a.event_probability}, false});
    }
    void evict(const RecordKey& key) {
        auto it = index_.find(key);
        if (it != index_.end()) entries_[it->second].evicted = true;
    }
    std::size_t size() const { return entries_.size(); }

    std::vector<ResultRecord> answer(const Query& q) const {
        std::vector<ResultRecord> out;
        for (const auto& e : entries_) {
            if (e.evicted) continue;
            const SimTime g = e.rec.gen_time;
            bool keep = false;
            if (q.kind == QueryKind::scan_filter) {
                const bool in_range =
                    q.lookback <= 0 || (g >= q.issue_time - q.lookback && g < q.issue_time);
                keep = in_range && e.rec.event_probability > q.threshold.value_or(0.9);
            } else {
                keep = q.interval->start <= g && g < q.interval->end;
            }
            if (keep) out.push_back(e.rec);
        }
        std::sort(out.begin(), out.end(), result_less);
        return out;
    }

private:
    struct Entry {
        ResultRecord rec;
        bool evicted = false;
    };
    std::vector<Entry> entries_;
    std::map<RecordKey, std::size_t> index_;
};

struct LinkTally {
    double bits = 0.0;
    double payload_bits = 0.0;
    std::int64_t messages = 0;
};

class Pipeline {
public:
    Pipeline(const RunConfig& cfg, const SimulationOptions& opt)
        : cfg_(cfg),
          opt_(opt),
          wl_(cfg.effective_workload()),
          duration_(seconds_to_ns(cfg.duration_s)),
          warmup_end_(static_cast<SimTime>(std::llround(cfg.warmup_frac * static_cast<double>(duration_)))),
          rng_gen_(stream(cfg.seed, 1)),
          rng_net_(stream(cfg.seed, 2)),
          rng_query_(stream(cfg.seed, 3)),
          onprem_node_("onprem", cfg.topology.onprem, cfg.record_footprint_bytes),
          onprem_cloud_(cfg.topology.onprem_cloud_link, cfg.topology.onprem_cloud_distance_km,
                        cfg.transport),
          inference_(seconds_to_ns(wl_.lstm_window_s), cfg.warning_threshold) {
        std::vector<int> site_ids;
        sites_.reserve(cfg.topology.sites.size());
        for (const auto& s : cfg.topology.sites) {
            sites_.emplace_back(s, cfg, wl_);
            site_ids.push_back(s.site_id);
        }
        for (const auto& c : cfg.topology.cloud) {
            cloud_nodes_.emplace_back("cloud/" + std::to_string(cloud_nodes_.size()), c,
                                      cfg.record_footprint_bytes);
        }
        store_ = std::make_unique<TimeSeriesStore>(
            static_cast<int>(cfg.topology.cloud.size()), site_ids,
            cfg.topology.cloud.front().effective_disk_bytes(), wl_.scan_threshold);
        reference_ = std::make_unique<ReferenceSut>(*store_);
        sut_ = opt.sut != nullptr ? opt.sut : reference_.get();
        for (std::size_t i = 0; i < site_ids.size(); ++i) {
            partition_[site_ids[i]] = static_cast<int>(i % cloud_nodes_.size());
        }
        clients_.resize(static_cast<std::size_t>(wl_.n_clients));
        for (std::size_t c = 0; c < clients_.size(); ++c) clients_[c].client_id = static_cast<int>(c);

        c_.duration = duration_;
        c_.warmup_end = warmup_end_;
        c_.binding = opt.sut != nullptr ? "external" : "in_process";
        c_.total_sensors = wl_.n_sensors * static_cast<std::int64_t>(sites_.size());

        if (cfg.verify) {
            // Keep brute-force verification near 1e9 record visits.
            const double queries = static_cast<double>(wl_.n_clients) * wl_.request_rate_hz * cfg.duration_s;
            const double records = derived_rates(wl_, sites_.size()).total_insert_rate_hz * cfg.duration_s;
            verify_stride_ = std::max<std::int64_t>(
                1, static_cast<std::int64_t>(std::ceil(queries * records / 2.0 / 1e9)));
        }
    }

    RunOutput run() {
        sim_.set_trace(opt_.trace);
        schedule_tick(0);
        for (std::size_t c = 0; c < clients_.size(); ++c) schedule_query(c, 0);
        sim_.schedule(warmup_end_, EventKind::timer, kGeneratorNode, [this] { on_warmup_end(); },
                      "warmup_end");
        sim_.schedule(duration_ / 2, EventKind::timer, kGeneratorNode, [this] { on_half(); },
                      "half");
        const EventStats stats = sim_.run_until(duration_);
        return finish(stats);
    }

private:
    bool post() const { return sim_.now() >= warmup_end_; }

    SimTime tick_time(std::int64_t k) const {
        return static_cast<SimTime>(std::llround(static_cast<double>(k) * 1e9 / wl_.sampling_rate_hz));
    }

    // Runs `fn` now if `t` is the present, otherwise schedules it.
    template <class Fn>
    void at(SimTime t, EventKind kind, int node, const char* detail, Fn&& fn) {
        if (t <= sim_.now()) {
            fn();
        } else {
            sim_.schedule(t, kind, node, std::forward<Fn>(fn), detail);
        }
    }

    void tally(const char* link, std::int64_t bits, std::int64_t payload) {
        if (!post()) return;
        auto& t = links_[link];
        t.bits += static_cast<double>(bits);
        t.payload_bits += static_cast<double>(payload);
        ++t.messages;
    }

    // ---- sensors ----------------------------------------------------------

    void schedule_tick(std::int64_t k) {
        const SimTime t = tick_time(k);
        if (t >= duration_) return;
        sim_.schedule(t, EventKind::generator_tick, kGeneratorNode, [this, k] { on_tick(k); }, "tick");
    }

    void on_tick(std::int64_t k) {
        const SimTime now = sim_.now();
        const bool counted = post();
        for (std::size_t si = 0; si < sites_.size(); ++si) {
            SiteRuntime& site = sites_[si];
            for (std::size_t j = 0; j < site.sensors.size(); ++j) {
                SensorState& sensor = site.sensors[j];
                const SensorReading reading = next_reading(sensor, now, rng_gen_);
                if (counted) {
                    ++c_.counters.readings;
                    if (reading.exceeds) ++c_.counters.exceed_readings;
                }
                if (reading.exceeds) {
                    if (auto trig = site.gateway.on_exceed(static_cast<int>(j), k, now)) {
                        start_collection(si, *trig);
                    }
                }
                SimTime ready = now;
                if (cfg_.costs.c_read > 0.0) {
                    if (auto done = site.sensor_nodes[j].execute(now, cfg_.costs.c_read)) {
                        ready = *done;
                    } else {
                        ++c_.counters.drops_sensor;
                    }
                }
                if (auto agg = maybe_aggregate(sensor, reading)) {
                    ++c_.counters.aggregates_created;
                    c_.omniscient.push_back(agg->gen_time);
                    InFlight f{*agg, now, static_cast<int>(si)};
                    at(ready, EventKind::service_completion, kSensorNode + static_cast<int>(j),
                       "aggregate_ready", [this, f] { send_aggregate(f); });
                }
            }
        }
        schedule_tick(k + 1);
    }

    void send_aggregate(const InFlight& f) {
        SiteRuntime& site = sites_[static_cast<std::size_t>(f.site_index)];
        const auto j = static_cast<std::size_t>(f.rec.sensor_id);
        const auto out = site.up[j].transmit(sim_.now(), f.rec.size_bits, rng_net_);
        tally("sensor_gateway", f.rec.size_bits, f.rec.size_bits - kRecordHeaderBits);
        if (post()) c_.sensor_payload_bits += static_cast<double>(f.rec.size_bits - kRecordHeaderBits);
        sim_.schedule(out.deliver_time, EventKind::message_arrival, kGatewayNode + f.site_index,
                      [this, f] { at_gateway(f); }, "aggregate");
    }

    // ---- gateway ----------------------------------------------------------

    void at_gateway(const InFlight& f) {
        SiteRuntime& site = sites_[static_cast<std::size_t>(f.site_index)];
        const ForwardAction fa =
            edge_on_aggregate(site.gateway, site.gateway_node, sim_.now(), f.rec, cfg_.costs.c_agg);
        if (!fa.forwarded) {
            ++c_.counters.drops_gateway;
            return;
        }
        at(fa.ready_time, EventKind::service_completion, kGatewayNode + f.site_index, "aggregate",
           [this, f] {
               SiteRuntime& s = sites_[static_cast<std::size_t>(f.site_index)];
               const auto out = s.uplink.transmit(sim_.now(), f.rec.size_bits, rng_net_);
               tally("gateway_onprem", f.rec.size_bits, f.rec.size_bits - kRecordHeaderBits);
               sim_.schedule(out.deliver_time, EventKind::message_arrival, kOnpremNode,
                             [this, f] { at_onprem(f); }, "aggregate");
           });
    }

    void start_collection(std::size_t si, const CollectionTrigger& trig) {
        ++c_.counters.triggers;
        SiteRuntime& site = sites_[si];
        for (std::size_t j = 0; j < site.sensors.size(); ++j) {
            const auto out = site.down[j].transmit(sim_.now(), kRecordHeaderBits, rng_net_);
            tally("gateway_sensor", kRecordHeaderBits, 0);
            const auto id = trig.trigger_id;
            const SimTime when = trig.trigger_time;
            sim_.schedule(out.deliver_time, EventKind::message_arrival,
                          kSensorNode + static_cast<int>(j),
                          [this, si, j, id, when] { on_trigger(si, j, id, when); }, "trigger");
        }
    }

    void on_trigger(std::size_t si, std::size_t j, std::uint64_t id, SimTime trigger_time) {
        SiteRuntime& site = sites_[si];
        const SensorState& sensor = site.sensors[j];
        const std::int64_t payload = dump_payload_bits(sensor);
        const std::int64_t bits = payload + kRecordHeaderBits;
        const auto readings = static_cast<std::int64_t>(sensor.buffer.size());
        if (post()) c_.sensor_payload_bits += static_cast<double>(payload);
        const auto out = site.up[j].transmit(sim_.now(), bits, rng_net_);
        tally("sensor_gateway", bits, payload);
        sim_.schedule(out.deliver_time, EventKind::message_arrival, kGatewayNode + static_cast<int>(si),
                      [this, si, id, readings, bits, trigger_time] {
                          on_dump(si, id, readings, bits, trigger_time);
                      },
                      "dump");
    }

    void on_dump(std::size_t si, std::uint64_t id, std::int64_t readings, std::int64_t bits,
                 SimTime trigger_time) {
        SiteRuntime& site = sites_[si];
        auto report = site.gateway.on_dump(id, readings, bits);
        if (!report) return;
        const auto done = site.gateway_node.execute(sim_.now(), cfg_.costs.c_evt);
        if (!done) {
            ++c_.counters.drops_gateway;
            return;
        }
        const EventReport r = *report;
        at(*done, EventKind::service_completion, kGatewayNode + static_cast<int>(si), "event_report",
           [this, si, r, trigger_time] {
               SiteRuntime& s = sites_[si];
               const auto up = s.uplink.transmit(sim_.now(), r.size_bits, rng_net_);
               tally("gateway_onprem", r.size_bits, r.size_bits);
               sim_.schedule(up.deliver_time, EventKind::message_arrival, kOnpremNode,
                             [this, si, r, trigger_time] {
                                 const auto wan = onprem_cloud_.transmit(sim_.now(), r.size_bits, rng_net_);
                                 tally("onprem_cloud", r.size_bits, r.size_bits);
                                 sim_.schedule(wan.deliver_time, EventKind::message_arrival, kCloudNode,
                                               [this, si, r, trigger_time] {
                                                   deliver_event(si, r, trigger_time);
                                               },
                                               "event_report");
                             },
                             "event_report");
           });
    }

    void deliver_event(std::size_t si, const EventReport& r, SimTime trigger_time) {
        if (sut_->capabilities().supports_event_reports) {
            const IngestReply reply = sut_->ingest_event(r, sim_.now());
            if (!reply.ok()) {
                ++c_.counters.event_ingest_failures;
                return;
            }
        }
        ++c_.counters.event_reports_delivered;
        if (trigger_time >= warmup_end_ && opt_.record_samples) {
            const SimTime raw = sim_.now() - trigger_time;
            c_.samples.push_back({SampleKind::event_report, trigger_time, raw,
                                  raw - sites_[si].event_offset,
                                  std::to_string(r.site_id) + ":" + std::to_string(r.report_id)});
        }
    }

    // ---- on-premise and cloud --------------------------------------------

    void at_onprem(const InFlight& f) {
        const auto done = onprem_node_.execute(sim_.now(), cfg_.costs.c_inf);
        if (!done) {
            ++c_.counters.drops_onprem;
            return;
        }
        const AnnotatedRecord a = inference_.infer_annotate(f.rec, *done);
        const SimTime created = f.created;
        const int si = f.site_index;
        at(*done + pipeline_delay_(), EventKind::service_completion, kOnpremNode, "annotated",
           [this, a, created, si] {
               const auto out = onprem_cloud_.transmit(sim_.now(), a.record.size_bits, rng_net_);
               tally("onprem_cloud", a.record.size_bits, a.record.size_bits - kRecordHeaderBits);
               sim_.schedule(out.deliver_time, EventKind::message_arrival, kCloudNode,
                             [this, a, created, si] { at_cloud(a, created, si); }, "annotated");
           });
    }

    SimTime pipeline_delay_() const { return seconds_to_ns(cfg_.pipeline_delay_s); }

    void at_cloud(const AnnotatedRecord& a, SimTime created, int si) {
        const int inst = partition_.at(a.record.site_id);
        NodeQueue& node = cloud_nodes_[static_cast<std::size_t>(inst)];
        const auto done = node.execute(sim_.now(), cfg_.costs.c_ins);
        if (!done) {
            ++c_.counters.drops_cloud;
            return;
        }
        at(*done, EventKind::service_completion, kCloudNode + inst, "insert",
           [this, a, created, si] { insert(a, created, si); });
    }

    void insert(const AnnotatedRecord& a, SimTime created, int si) {
        const IngestReply reply = sut_->ingest(a, sim_.now());
        if (!reply.ok()) {
            ++c_.counters.ingest_failures;
            return;
        }
        ++c_.counters.aggregates_inserted;
        if (cfg_.verify) {
            oracle_.add(a);
            if (sut_ == reference_.get()) {
                for (const auto& key : reference_->last_ack().evicted) oracle_.evict(key);
            }
        }
        if (created >= warmup_end_ && opt_.record_samples) {
            const SimTime raw = sim_.now() - created;
            c_.samples.push_back({SampleKind::e2e_insert, created, raw,
                                  raw - sites_[static_cast<std::size_t>(si)].offset,
                                  std::to_string(a.record.site_id) + ":" +
                                      std::to_string(a.record.sensor_id) + ":" +
                                      std::to_string(a.record.window_seq)});
        }
    }

    // ---- queries ----------------------------------------------------------

    SimTime query_time(std::size_t client, std::int64_t m) const {
        const double period = 1e9 / wl_.request_rate_hz;
        const double phase = static_cast<double>(client) / static_cast<double>(clients_.size());
        return static_cast<SimTime>(std::llround((phase + static_cast<double>(m)) * period));
    }

    void schedule_query(std::size_t client, std::int64_t m) {
        if (wl_.request_rate_hz <= 0.0) return;
        const SimTime t = query_time(client, m);
        if (t >= duration_) return;
        sim_.schedule(t, EventKind::timer, kClientNode + static_cast<int>(client),
                      [this, client, m] { on_query(client, m); }, "query");
    }

    void on_query(std::size_t client, std::int64_t m) {
        schedule_query(client, m + 1);
        const SimTime now = sim_.now();
        const Query q = next_query(clients_[client], wl_, rng_query_, now, 0);
        const bool counted = post();
        const std::int64_t seq = c_.counters.queries_issued++;
        ++c_.counters.queries_by_kind[static_cast<std::size_t>(q.kind)];

        const bool check = cfg_.verify && seq % verify_stride_ == 0;
        QueryOptions options;
        options.materialize = check || opt_.capture_results;
        if (q.kind == QueryKind::recent_1h) options.due_by = now - seconds_to_ns(wl_.stale_threshold_s);

        if (q.kind == QueryKind::scan_filter && !sut_->capabilities().supports_scan) {
            ++c_.counters.query_failures;
            return;
        }
        const QueryReply reply = sut_->query(q, options);
        if (!reply.ok()) {
            ++c_.counters.query_failures;
            if (opt_.capture_results) c_results_.push_back({q.query_id, 0, 0, false});
            return;
        }
        const QueryResult& res = reply.result;

        // Charge the query on every instance that served it.
        std::vector<InstanceShare> shares = res.shares;
        if (shares.empty()) {
            std::map<int, InstanceShare> by_inst;
            for (int i : res.served_by) by_inst[i].instance = i;
            for (const auto& rec : res.records) {
                auto& s = by_inst[partition_.at(rec.key.site_id)];
                s.instance = partition_.at(rec.key.site_id);
                ++s.touched;
                ++s.returned;
            }
            for (auto& [_, s] : by_inst) shares.push_back(s);
        }
        SimTime completion = now;
        bool dropped = false;
        for (const auto& s : shares) {
            const double cost = cfg_.costs.c_q_base +
                                cfg_.costs.c_q_per_record * static_cast<double>(s.touched);
            auto& node = cloud_nodes_.at(static_cast<std::size_t>(s.instance));
            if (auto done = node.execute(now, cost)) {
                completion = std::max(completion, *done);
            } else {
                dropped = true;
            }
        }
        if (dropped) {
            ++c_.counters.query_failures;
            ++c_.counters.drops_cloud;
            return;
        }

        if (check) {
            ++c_.counters.verified_queries;
            const auto expected = oracle_.answer(q);
            if (expected != res.records || res.count != static_cast<std::int64_t>(expected.size())) {
                ++c_.counters.verification_mismatches;
            }
        }
        if (opt_.capture_results) {
            c_results_.push_back({q.query_id, res.count, digest(res.records), true});
        }
        if (counted) {
            if (q.kind == QueryKind::recent_1h) c_.probes.push_back({now, res.due_count});
            if (opt_.record_samples) {
                const SimTime raw = completion - now;
                c_.samples.push_back({SampleKind::query, now, raw, raw,
                                      std::string(to_string(q.kind)) + ":" + std::to_string(q.query_id)});
            }
        }
    }

    // ---- observation points ---------------------------------------------

    template <class Fn>
    void for_edge(Fn&& fn) {
        for (auto& s : sites_) {
            fn(s.gateway_node);
            for (auto& n : s.sensor_nodes) fn(n);
        }
    }

    double edge_area() {
        double area = 0.0;
        for_edge([&](NodeQueue& n) {
            n.advance(sim_.now());
            area += n.integrals().length_area;
        });
        return area;
    }

    void on_warmup_end() {
        for (auto& n : cloud_nodes_) {
            n.advance(sim_.now());
            cloud_busy_at_warmup_.push_back(n.integrals().busy_ns);
        }
        onprem_node_.advance(sim_.now());
        onprem_busy_at_warmup_ = onprem_node_.integrals().busy_ns;
        for (auto& s : sites_) {
            s.gateway_node.advance(sim_.now());
            gateway_busy_at_warmup_.push_back(s.gateway_node.integrals().busy_ns);
        }
    }

    void on_half() { half_area_ = edge_area(); }

    RunOutput finish(const EventStats& stats) {
        const double end_area = edge_area();
        const double half_s = static_cast<double>(duration_ / 2);
        const double rest = static_cast<double>(duration_ - duration_ / 2);
        c_.edge_queue.first_half_avg = half_s > 0 ? half_area_ / half_s : 0.0;
        c_.edge_queue.second_half_avg = rest > 0 ? (end_area - half_area_) / rest : 0.0;
        std::int64_t edge_drops = 0;
        for_edge([&](NodeQueue& n) { edge_drops += n.drops(); });
        c_.edge_queue.drops = edge_drops;

        const double window = static_cast<double>(duration_ - warmup_end_);
        auto util = [&](NodeQueue& n, double at_warmup) {
            n.advance(duration_);
            return window > 0 ? (n.integrals().busy_ns - at_warmup) / window : 0.0;
        };
        nlohmann::json cloud_util = nlohmann::json::array();
        double cloud_sum = 0.0;
        for (std::size_t i = 0; i < cloud_nodes_.size(); ++i) {
            const double u = util(cloud_nodes_[i], cloud_busy_at_warmup_.at(i));
            cloud_util.push_back(u);
            cloud_sum += u;
        }
        c_.cloud_utilization = cloud_sum / static_cast<double>(cloud_nodes_.size());
        nlohmann::json gw_util = nlohmann::json::array();
        for (std::size_t i = 0; i < sites_.size(); ++i) {
            gw_util.push_back(util(sites_[i].gateway_node, gateway_busy_at_warmup_.at(i)));
        }
        c_.sections["utilization"] = {{"cloud", cloud_util},
                                      {"gateway", gw_util},
                                      {"onprem", util(onprem_node_, onprem_busy_at_warmup_)}};

        const double window_s = window / 1e9;
        const double n_sensors = static_cast<double>(c_.total_sensors);
        nlohmann::json bw = nlohmann::json::object();
        for (const auto& [name, t] : links_) {
            const double per = (name == "sensor_gateway" || name == "gateway_sensor") ? n_sensors
                               : name == "gateway_onprem" ? static_cast<double>(sites_.size())
                                                          : 1.0;
            bw[name] = {{"mean_bps_per_link", window_s > 0 ? t.bits / window_s / per : 0.0},
                        {"payload_bps_per_link", window_s > 0 ? t.payload_bits / window_s / per : 0.0},
                        {"messages", t.messages}};
        }
        c_.sections["bandwidth"] = bw;

        // Aggregated transport counters per link class.
        LinkCounters sensor_up, sensor_down, uplinks;
        auto add = [](LinkCounters& a, const LinkCounters& b) {
            a.messages += b.messages;
            a.message_bits += b.message_bits;
            a.packets_generated += b.packets_generated;
            a.packets_delivered += b.packets_delivered;
            a.packets_lost += b.packets_lost;
            a.packets_corrupted += b.packets_corrupted;
            a.duplicates_discarded += b.duplicates_discarded;
            a.reordered += b.reordered;
            a.retransmissions += b.retransmissions;
            a.bits_on_wire += b.bits_on_wire;
        };
        for (const auto& s : sites_) {
            for (const auto& l : s.up) add(sensor_up, l.counters());
            for (const auto& l : s.down) add(sensor_down, l.counters());
            add(uplinks, s.uplink.counters());
        }
        auto counters_json = [](const LinkCounters& k) {
            return nlohmann::json{{"messages", k.messages},
                                  {"packets_generated", k.packets_generated},
                                  {"packets_delivered", k.packets_delivered},
                                  {"packets_lost", k.packets_lost},
                                  {"packets_corrupted", k.packets_corrupted},
                                  {"duplicates_discarded", k.duplicates_discarded},
                                  {"reordered", k.reordered},
                                  {"retransmissions", k.retransmissions},
                                  {"bits_on_wire", k.bits_on_wire}};
        };
        c_.sections["links"] = {{"sensor_gateway", counters_json(sensor_up)},
                                {"gateway_sensor", counters_json(sensor_down)},
                                {"gateway_onprem", counters_json(uplinks)},
                                {"onprem_cloud", counters_json(onprem_cloud_.counters())}};
        c_.sections["events"] = {{"processed", stats.processed},
                                 {"generator_tick", stats.by_kind[3]},
                                 {"message_arrival", stats.by_kind[0]},
                                 {"service_completion", stats.by_kind[1]},
                                 {"timer", stats.by_kind[2]}};
        c_.counters.warnings = inference_.warnings();
        c_.counters.evictions = store_->evictions();

        if (cfg_.verify) check_invariants(sensor_up, sensor_down, uplinks);

        RunOutput out = detail::finalize(cfg_, std::move(c_));
        out.results = std::move(c_results_);
        return out;
    }

    void check_invariants(const LinkCounters& a, const LinkCounters& b, const LinkCounters& c) {
        auto conserve = [&](const char* name, const LinkCounters& k) {
            if (k.packets_generated != k.packets_delivered + k.packets_lost + k.packets_corrupted +
                                           k.duplicates_discarded) {
                c_.invariant_failures.push_back(std::string(name) + ": packet conservation violated");
            }
        };
        conserve("sensor_gateway", a);
        conserve("gateway_sensor", b);
        conserve("gateway_onprem", c);
        conserve("onprem_cloud", onprem_cloud_.counters());

        const auto& k = c_.counters;
        const std::int64_t accounted = k.aggregates_inserted + k.ingest_failures + k.drops_gateway +
                                       k.drops_onprem + k.drops_cloud;
        if (accounted > k.aggregates_created + k.triggers) {
            c_.invariant_failures.push_back("more aggregates accounted than created");
        }
        if (sut_ == reference_.get() &&
            store_->size() != k.aggregates_inserted - store_->evictions()) {
            c_.invariant_failures.push_back("store size differs from inserts minus evictions");
        }
        if (static_cast<std::int64_t>(c_.omniscient.size()) != k.aggregates_created) {
            c_.invariant_failures.push_back("omniscient log incomplete");
        }
        if (oracle_.size() != static_cast<std::size_t>(k.aggregates_inserted)) {
            c_.invariant_failures.push_back("oracle log incomplete");
        }
    }

    const RunConfig& cfg_;
    const SimulationOptions& opt_;
    WorkloadParams wl_;
    SimTime duration_;
    SimTime warmup_end_;
    Simulator sim_;
    Rng rng_gen_, rng_net_, rng_query_;
    std::vector<SiteRuntime> sites_;
    NodeQueue onprem_node_;
    Link onprem_cloud_;
    InferenceService inference_;
    std::vector<NodeQueue> cloud_nodes_;
    std::unique_ptr<TimeSeriesStore> store_;
    std::unique_ptr<ReferenceSut> reference_;
    Sut* sut_ = nullptr;
    std::map<int, int> partition_;
    std::vector<ClientState> clients_;
    std::map<std::string, LinkTally> links_;
    Oracle oracle_;
    std::int64_t verify_stride_ = 1;
    detail::Collected c_;
    std::vector<QueryDigest> c_results_;
    double half_area_ = 0.0;
    std::vector<double> cloud_busy_at_warmup_;
    std::vector<double> gateway_busy_at_warmup_;
    double onprem_busy_at_warmup_ = 0.0;
};

void check_run_length(const RunConfig& cfg) {
    const WorkloadParams wl = cfg.effective_workload();
    const double warmup = cfg.warmup_frac * cfg.duration_s;
    const double window = static_cast<double>(wl.n_agg) / wl.sampling_rate_hz;
    if (cfg.duration_s - warmup < window) {
        throw ConfigError("run.duration_s: " + std::to_string(cfg.duration_s) +
                          " s leaves less than one aggregation window after the " +
                          std::to_string(warmup) + " s warm-up");
    }
}

}  // namespace

RunOutput run_simulation(const RunConfig& config, const SimulationOptions& options) {
    config.validate();
    check_run_length(config);
    Pipeline p(config, options);
    return p.run();
}

}  // namespace fogbench
