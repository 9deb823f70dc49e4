// Wall-clock run against an external SUT. Generators and the reference
// edge/inference services run in-process in real time without network
// emulation; annotated records and queries go to the SUT over the wire
// protocol. Latencies are measured on the steady clock from the intended
// issue time, so backlog inside the harness counts against the SUT.

#include <chrono>
#include <cmath>
#include <condition_variable>
#include <atomic>
#include <deque>
#include <mutex>
#include <queue>
#include <thread>

#include "fogbench/runner.hpp"
#include "fogbench/services.hpp"
#include "fogbench/workload.hpp"
#include "report.hpp"

namespace fogbench {

namespace {

using Clock = std::chrono::steady_clock;

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

Rng stream(std::uint64_t seed, std::uint64_t id) { return Rng(splitmix64(seed ^ splitmix64(id))); }

template <class T>
class WorkQueue {
public:
    void push(T item) {
        {
            std::lock_guard lk(mu_);
            items_.push_back(std::move(item));
        }
        cv_.notify_one();
    }
    // Blocks until an item arrives or the queue is closed and empty.
    std::optional<T> pop() {
        std::unique_lock lk(mu_);
        cv_.wait(lk, [&] { return closed_ || !items_.empty(); });
        if (items_.empty()) return std::nullopt;
        T item = std::move(items_.front());
        items_.pop_front();
        return item;
    }
    void close() {
        {
            std::lock_guard lk(mu_);
            closed_ = true;
        }
        cv_.notify_all();
    }
    // Drops whatever is still queued and returns how many items that was.
    std::size_t abandon() {
        std::lock_guard lk(mu_);
        const std::size_t n = items_.size();
        items_.clear();
        closed_ = true;
        cv_.notify_all();
        return n;
    }

private:
    std::mutex mu_;
    std::condition_variable cv_;
    std::deque<T> items_;
    bool closed_ = false;
};

struct IngestJob {
    bool is_event = false;
    AnnotatedRecord record;
    EventReport report;
    SimTime created = 0;
};

class ExternalRun {
public:
    explicit ExternalRun(const RunConfig& cfg)
        : cfg_(cfg),
          wl_(cfg.effective_workload()),
          duration_(seconds_to_ns(cfg.duration_s)),
          warmup_end_(static_cast<SimTime>(std::llround(cfg.warmup_frac * static_cast<double>(duration_)))),
          sut_(parse_endpoint(cfg.endpoint), cfg.pool_size, cfg.timeout_s,
               SutCapabilities{cfg.supports_event_reports, cfg.supports_scan}),
          inference_(seconds_to_ns(wl_.lstm_window_s), cfg.warning_threshold) {
        for (const auto& s : cfg.topology.sites) {
            gateways_.emplace_back(s.site_id, wl_.n_sensors, wl_.quorum_ratio);
            for (std::int64_t j = 0; j < wl_.n_sensors; ++j) {
                sensors_.emplace_back(s.site_id, static_cast<int>(j), wl_);
            }
        }
        clients_.resize(static_cast<std::size_t>(wl_.n_clients));
        for (std::size_t c = 0; c < clients_.size(); ++c) clients_[c].client_id = static_cast<int>(c);
        c_.duration = duration_;
        c_.warmup_end = warmup_end_;
        c_.binding = "external";
        c_.total_sensors = wl_.n_sensors * static_cast<std::int64_t>(cfg.topology.sites.size());
    }

    RunOutput run() {
        start_ = Clock::now();
        const int workers = std::max(1, cfg_.pool_size / 2);
        std::vector<std::thread> threads;
        for (int i = 0; i < workers; ++i) threads.emplace_back([this] { ingest_worker(); });
        for (int i = 0; i < std::max(1, cfg_.pool_size - workers); ++i) {
            threads.emplace_back([this] { query_worker(); });
        }
        std::thread queries([this] { query_scheduler(); });
        generate();
        queries.join();

        // Give in-flight work one timeout to drain; what is left has failed.
        ingest_q_.close();
        query_q_.close();
        const auto deadline = Clock::now() + std::chrono::duration<double>(cfg_.timeout_s);
        while (Clock::now() < deadline && outstanding_.load() > 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(5));
        }
        const auto lost_ingest = static_cast<std::int64_t>(ingest_q_.abandon());
        const auto lost_queries = static_cast<std::int64_t>(query_q_.abandon());
        for (auto& t : threads) t.join();

        std::lock_guard lk(mu_);
        c_.counters.ingest_failures += lost_ingest;
        c_.counters.query_failures += lost_queries;
        c_.counters.warnings = inference_.warnings();
        c_.sensor_payload_bits = c_sensor_payload_;
        const RemoteStats rs = sut_.stats();
        c_.sections["remote"] = {{"endpoint", cfg_.endpoint},
                                 {"timeouts", rs.timeouts},
                                 {"protocol_errors", rs.protocol_errors}};
        return detail::finalize(cfg_, std::move(c_));
    }

private:
    SimTime now() const {
        return std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - start_).count();
    }
    void sleep_until(SimTime t) const { std::this_thread::sleep_until(start_ + std::chrono::nanoseconds(t)); }

    void generate() {
        Rng rng = stream(cfg_.seed, 1);
        for (std::int64_t k = 0;; ++k) {
            const auto t = static_cast<SimTime>(std::llround(static_cast<double>(k) * 1e9 / wl_.sampling_rate_hz));
            if (t >= duration_) break;
            sleep_until(t);
            const bool counted = t >= warmup_end_;
            std::int64_t readings = 0, exceed = 0;
            std::vector<IngestJob> out;
            std::vector<SimTime> created;
            for (auto& sensor : sensors_) {
                const SensorReading r = next_reading(sensor, t, rng);
                ++readings;
                auto& gw = gateways_[static_cast<std::size_t>(&sensor - sensors_.data()) /
                                     static_cast<std::size_t>(wl_.n_sensors)];
                if (r.exceeds) {
                    ++exceed;
                    if (auto trig = gw.on_exceed(sensor.sensor_id, k, t)) collect(gw, *trig, out);
                }
                if (auto agg = maybe_aggregate(sensor, r)) {
                    created.push_back(agg->gen_time);
                    if (counted) c_sensor_payload_ += static_cast<double>(agg->size_bits - kRecordHeaderBits);
                    IngestJob job;
                    job.record = inference_.infer_annotate(*agg, t);
                    job.created = t;
                    out.push_back(std::move(job));
                }
            }
            {
                std::lock_guard lk(mu_);
                if (counted) {
                    c_.counters.readings += readings;
                    c_.counters.exceed_readings += exceed;
                }
                c_.counters.aggregates_created += static_cast<std::int64_t>(created.size());
                c_.omniscient.insert(c_.omniscient.end(), created.begin(), created.end());
            }
            for (auto& job : out) {
                ++outstanding_;
                ingest_q_.push(std::move(job));
            }
        }
    }

    // Without network emulation a collection completes at trigger time.
    void collect(GatewayState& gw, const CollectionTrigger& trig, std::vector<IngestJob>& out) {
        {
            std::lock_guard lk(mu_);
            ++c_.counters.triggers;
        }
        std::optional<EventReport> report;
        for (const auto& s : sensors_) {
            if (s.site_id != gw.site_id()) continue;
            const std::int64_t payload = dump_payload_bits(s);
            if (trig.trigger_time >= warmup_end_) c_sensor_payload_ += static_cast<double>(payload);
            report = gw.on_dump(trig.trigger_id, static_cast<std::int64_t>(s.buffer.size()),
                                payload + kRecordHeaderBits);
        }
        if (report && cfg_.supports_event_reports) {
            IngestJob job;
            job.is_event = true;
            job.report = *report;
            job.created = trig.trigger_time;
            out.push_back(std::move(job));
        }
    }

    void ingest_worker() {
        while (auto job = ingest_q_.pop()) {
            const IngestReply reply = job->is_event ? sut_.ingest_event(job->report, now())
                                                    : sut_.ingest(job->record, now());
            const SimTime done = now();
            {
                std::lock_guard lk(mu_);
                if (!reply.ok()) {
                    ++(job->is_event ? c_.counters.event_ingest_failures : c_.counters.ingest_failures);
                } else if (job->is_event) {
                    ++c_.counters.event_reports_delivered;
                    if (job->created >= warmup_end_) {
                        const SimTime raw = done - job->created;
                        c_.samples.push_back({SampleKind::event_report, job->created, raw, raw,
                                              std::to_string(job->report.site_id) + ":" +
                                                  std::to_string(job->report.report_id)});
                    }
                } else {
                    ++c_.counters.aggregates_inserted;
                    if (job->created >= warmup_end_) {
                        const auto& r = job->record.record;
                        const SimTime raw = done - job->created;
                        c_.samples.push_back({SampleKind::e2e_insert, job->created, raw, raw,
                                              std::to_string(r.site_id) + ":" + std::to_string(r.sensor_id) +
                                                  ":" + std::to_string(r.window_seq)});
                    }
                }
            }
            --outstanding_;
        }
    }

    void query_scheduler() {
        if (wl_.request_rate_hz <= 0.0) return;
        Rng rng = stream(cfg_.seed, 3);
        using Pending = std::tuple<SimTime, std::size_t, std::int64_t>;
        std::priority_queue<Pending, std::vector<Pending>, std::greater<>> due;
        auto at = [&](std::size_t c, std::int64_t m) {
            const double period = 1e9 / wl_.request_rate_hz;
            const double phase = static_cast<double>(c) / static_cast<double>(clients_.size());
            return static_cast<SimTime>(std::llround((phase + static_cast<double>(m)) * period));
        };
        for (std::size_t c = 0; c < clients_.size(); ++c) due.emplace(at(c, 0), c, 0);
        while (!due.empty()) {
            auto [t, c, m] = due.top();
            due.pop();
            if (t >= duration_) continue;
            sleep_until(t);
            Query q = next_query(clients_[c], wl_, rng, t, 0);
            {
                std::lock_guard lk(mu_);
                ++c_.counters.queries_issued;
                ++c_.counters.queries_by_kind[static_cast<std::size_t>(q.kind)];
            }
            ++outstanding_;
            query_q_.push(std::move(q));
            due.emplace(at(c, m + 1), c, m + 1);
        }
    }

    void query_worker() {
        while (auto q = query_q_.pop()) {
            QueryOptions options;
            if (q->kind == QueryKind::recent_1h) {
                options.due_by = q->issue_time - seconds_to_ns(wl_.stale_threshold_s);
            }
            QueryReply reply;
            if (q->kind == QueryKind::scan_filter && !cfg_.supports_scan) {
                reply.error = SutError::unsupported;
            } else {
                reply = sut_.query(*q, options);
            }
            const SimTime done = now();
            {
                std::lock_guard lk(mu_);
                if (!reply.ok()) {
                    ++c_.counters.query_failures;
                } else if (q->issue_time >= warmup_end_) {
                    if (q->kind == QueryKind::recent_1h) {
                        c_.probes.push_back({q->issue_time, reply.result.due_count});
                    }
                    const SimTime raw = done - q->issue_time;
                    c_.samples.push_back({SampleKind::query, q->issue_time, raw, raw,
                                          std::string(to_string(q->kind)) + ":" + std::to_string(q->query_id)});
                }
            }
            --outstanding_;
        }
    }

    const RunConfig& cfg_;
    WorkloadParams wl_;
    SimTime duration_;
    SimTime warmup_end_;
    RemoteSut sut_;
    InferenceService inference_;
    std::vector<GatewayState> gateways_;
    std::vector<SensorState> sensors_;
    std::vector<ClientState> clients_;
    Clock::time_point start_;
    WorkQueue<IngestJob> ingest_q_;
    WorkQueue<Query> query_q_;
    std::atomic<std::int64_t> outstanding_{0};
    std::mutex mu_;
    detail::Collected c_;
    double c_sensor_payload_ = 0.0;  // generator thread only
};

}  // namespace

RunOutput run_external(const RunConfig& config) {
    config.validate();
    ExternalRun run(config);  // connects first; throws SutUnreachable
    RunOutput out = run.run();
    return out;
}

}  // namespace fogbench
