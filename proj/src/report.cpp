#include "report.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace fogbench {

using nlohmann::json;

namespace detail {

namespace {

json opt(const std::optional<SimTime>& v) { return v ? json(*v) : json(nullptr); }
json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::string_view subject_kind(const std::string& subject) {
    const auto colon = subject.find(':');
    return std::string_view(subject).substr(0, colon);
}

json rates_json(const RateSummary& r) {
    return {{"raw_rate_bps", r.raw_rate_bps},
            {"quorum_probability", r.quorum_probability},
            {"trigger_rate_per_site_hz", r.trigger_rate_per_site_hz},
            {"mean_sensor_gateway_bps", r.mean_sensor_gateway_bps},
            {"edge_ingress_bps", r.edge_ingress_bps},
            {"aggregate_rate_per_sensor_hz", r.aggregate_rate_per_sensor_hz},
            {"aggregate_rate_per_site_hz", r.aggregate_rate_per_site_hz},
            {"total_insert_rate_hz", r.total_insert_rate_hz},
            {"query_rate_hz", r.query_rate_hz}};
}

void check_summary(const char* name, const LatencySummary& s, std::vector<std::string>& failures) {
    if (s.count == 0) return;
    if (!(*s.p50 <= *s.p90 && *s.p90 <= *s.p99 && *s.p99 <= *s.max)) {
        failures.push_back(std::string(name) + ": percentiles not monotone");
    }
}

}  // namespace

json summary_json(const LatencySummary& s) {
    return {{"count", s.count}, {"p50_ns", opt(s.p50)}, {"p90_ns", opt(s.p90)},
            {"p99_ns", opt(s.p99)}, {"max_ns", opt(s.max)}, {"mean_ns", opt(s.mean)}};
}

RunOutput finalize(const RunConfig& config, Collected&& c) {
    RunOutput out;
    const WorkloadParams wl = config.effective_workload();
    std::sort(c.omniscient.begin(), c.omniscient.end());
    const SimTime t_stale = seconds_to_ns(wl.stale_threshold_s);
    out.staleness_ratio = staleness_violation_ratio(c.probes, c.omniscient, t_stale);

    std::vector<SimTime> e2e_raw, e2e_cor, evt_raw, evt_cor, q_all;
    std::map<std::string, std::vector<SimTime>> q_by_kind;
    for (const auto& s : c.samples) {
        switch (s.kind) {
            case SampleKind::e2e_insert:
                e2e_raw.push_back(s.raw_ns);
                e2e_cor.push_back(s.corrected_ns);
                break;
            case SampleKind::event_report:
                evt_raw.push_back(s.raw_ns);
                evt_cor.push_back(s.corrected_ns);
                break;
            case SampleKind::query:
                q_all.push_back(s.raw_ns);
                q_by_kind[std::string(subject_kind(s.subject))].push_back(s.raw_ns);
                break;
        }
    }

    const auto e2e_raw_s = summarize(e2e_raw), e2e_cor_s = summarize(e2e_cor);
    const auto evt_raw_s = summarize(evt_raw), evt_cor_s = summarize(evt_cor);
    const auto q_s = summarize(q_all);

    json queries = {{"all", summary_json(q_s)}};
    for (auto& [kind, v] : q_by_kind) queries[kind] = summary_json(summarize(std::move(v)));

    const RunCounters& k = c.counters;
    const double window_s = ns_to_seconds(c.duration - c.warmup_end);
    out.exceed_fraction =
        k.readings > 0 ? static_cast<double>(k.exceed_readings) / static_cast<double>(k.readings) : 0.0;
    out.sensor_gateway_payload_bps =
        c.total_sensors > 0 && window_s > 0
            ? c.sensor_payload_bits / (window_s * static_cast<double>(c.total_sensors))
            : 0.0;

    const auto rate = [](std::int64_t fails, std::int64_t total) {
        return total > 0 ? static_cast<double>(fails) / static_cast<double>(total) : 0.0;
    };

    if (config.verify) {
        check_summary("e2e_insert.raw", e2e_raw_s, c.invariant_failures);
        check_summary("e2e_insert.corrected", e2e_cor_s, c.invariant_failures);
        check_summary("event_report.raw", evt_raw_s, c.invariant_failures);
        check_summary("query", q_s, c.invariant_failures);
        if (out.staleness_ratio && (*out.staleness_ratio < 0.0 || *out.staleness_ratio > 1.0)) {
            c.invariant_failures.push_back("staleness ratio outside [0, 1]");
        }
        if (k.verification_mismatches > 0) {
            c.invariant_failures.push_back(std::to_string(k.verification_mismatches) +
                                           " query results differ from the oracle");
        }
    }

    json report = {
        {"schema_version", kReportSchemaVersion},
        {"tool", {{"name", kToolName}, {"version", kToolVersion}}},
        {"seed", config.seed},
        {"config_hash", config_hash(config)},
        {"config", canonical_json(config)},
        {"mode", std::string(to_string(config.mode))},
        {"binding", c.binding},
        {"duration_s", ns_to_seconds(c.duration)},
        {"warmup_s", ns_to_seconds(c.warmup_end)},
        {"model", rates_json(derived_rates(wl, config.topology.sites.size()))},
        {"latency",
         {{"e2e_insert", {{"raw", summary_json(e2e_raw_s)}, {"corrected", summary_json(e2e_cor_s)}}},
          {"event_report", {{"raw", summary_json(evt_raw_s)}, {"corrected", summary_json(evt_cor_s)}}},
          {"query", queries}}},
        {"staleness",
         {{"violation_ratio", opt(out.staleness_ratio)},
          {"probes", static_cast<std::int64_t>(c.probes.size())},
          {"t_stale_s", wl.stale_threshold_s}}},
        {"failures",
         {{"ingest", k.ingest_failures},
          {"ingest_rate", rate(k.ingest_failures, k.aggregates_inserted + k.ingest_failures)},
          {"event_ingest", k.event_ingest_failures},
          {"query", k.query_failures},
          {"query_rate", rate(k.query_failures, k.queries_issued)}}},
        {"counters",
         {{"readings", k.readings},
          {"exceed_readings", k.exceed_readings},
          {"aggregates_created", k.aggregates_created},
          {"aggregates_inserted", k.aggregates_inserted},
          {"drops", {{"sensor", k.drops_sensor}, {"gateway", k.drops_gateway},
                     {"onprem", k.drops_onprem}, {"cloud", k.drops_cloud}}},
          {"triggers", k.triggers},
          {"event_reports_delivered", k.event_reports_delivered},
          {"queries_issued", k.queries_issued},
          {"queries_by_kind", {{"recent_1h", k.queries_by_kind[0]},
                               {"random_1h", k.queries_by_kind[1]},
                               {"scan_filter", k.queries_by_kind[2]}}},
          {"warnings", k.warnings},
          {"evictions", k.evictions}}},
        {"exceed_fraction", out.exceed_fraction},
        {"sensor_gateway_payload_bps", out.sensor_gateway_payload_bps},
        {"edge_queue",
         {{"first_half_avg", c.edge_queue.first_half_avg},
          {"second_half_avg", c.edge_queue.second_half_avg},
          {"drops", c.edge_queue.drops},
          {"stable", queue_stable(c.edge_queue)}}},
        {"cloud_utilization", c.cloud_utilization},
    };
    for (auto& [key, value] : c.sections.items()) report[key] = value;
    if (config.verify) {
        report["verification"] = {{"queries_checked", k.verified_queries},
                                  {"mismatches", k.verification_mismatches},
                                  {"invariant_failures", c.invariant_failures}};
    }

    out.report = std::move(report);
    out.samples = std::move(c.samples);
    out.counters = k;
    out.edge_queue = c.edge_queue;
    out.cloud_utilization = c.cloud_utilization;
    out.invariant_failures = std::move(c.invariant_failures);
    return out;
}

}  // namespace detail

std::string samples_csv(const std::vector<LatencySample>& samples) {
    std::ostringstream os;
    os << "kind,issue_time_ns,raw_ns,corrected_ns,subject\n";
    for (const auto& s : samples) {
        os << to_string(s.kind) << ',' << s.issue_time << ',' << s.raw_ns << ',' << s.corrected_ns
           << ',' << s.subject << '\n';
    }
    return os.str();
}

std::string provenance_comment(const RunConfig& config) {
    return std::string("# ") + kToolName + " " + kToolVersion + " config_hash=" + config_hash(config) +
           " seed=" + std::to_string(config.seed);
}

void write_artifacts(const RunOutput& out, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream f(dir / "report.json");
        if (!f) throw std::runtime_error("cannot write " + (dir / "report.json").string());
        f << out.report.dump(2) << '\n';
    }
    std::ofstream f(dir / "samples.csv");
    if (!f) throw std::runtime_error("cannot write " + (dir / "samples.csv").string());
    f << "# " << kToolName << ' ' << kToolVersion
      << " config_hash=" << out.report.at("config_hash").get<std::string>()
      << " seed=" << out.report.at("seed").get<std::uint64_t>() << '\n';
    f << samples_csv(out.samples);
}

}  // namespace fogbench
