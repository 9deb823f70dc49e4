#include "fogbench/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

namespace fogbench {

using nlohmann::json;

namespace {

void check_object(const json& obj, const std::string& path) {
    if (!obj.is_object()) throw ConfigError(path + ": expected an object");
}

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& path) {
    check_object(obj, path);
    for (const auto& [key, _] : obj.items()) {
        if (allowed.count(key) == 0) throw ConfigError(path + "." + key + ": unknown key");
    }
}

void read(const json& obj, const std::string& key, double& out, const std::string& path) {
    auto it = obj.find(key);
    if (it == obj.end()) return;
    if (!it->is_number()) throw ConfigError(path + "." + key + ": expected a number");
    out = it->get<double>();
    if (!std::isfinite(out)) throw ConfigError(path + "." + key + ": must be finite");
}

void read(const json& obj, const std::string& key, std::int64_t& out, const std::string& path) {
    auto it = obj.find(key);
    if (it == obj.end()) return;
    if (!it->is_number_integer()) throw ConfigError(path + "." + key + ": expected an integer");
    out = it->get<std::int64_t>();
}

void read(const json& obj, const std::string& key, int& out, const std::string& path) {
    std::int64_t v = out;
    read(obj, key, v, path);
    out = static_cast<int>(v);
}

void read(const json& obj, const std::string& key, std::uint64_t& out, const std::string& path) {
    auto it = obj.find(key);
    if (it == obj.end()) return;
    const bool ok = it->is_number_unsigned() || (it->is_number_integer() && it->get<std::int64_t>() >= 0);
    if (!ok) throw ConfigError(path + "." + key + ": expected a non-negative integer");
    out = it->get<std::uint64_t>();
}

void read(const json& obj, const std::string& key, bool& out, const std::string& path) {
    auto it = obj.find(key);
    if (it == obj.end()) return;
    if (!it->is_boolean()) throw ConfigError(path + "." + key + ": expected a boolean");
    out = it->get<bool>();
}

void read(const json& obj, const std::string& key, std::string& out, const std::string& path) {
    auto it = obj.find(key);
    if (it == obj.end()) return;
    if (!it->is_string()) throw ConfigError(path + "." + key + ": expected a string");
    out = it->get<std::string>();
}

template <class Fn>
void with_field_errors(const std::string& path, Fn&& fn) {
    try {
        fn();
    } catch (const InvalidParameter& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

void parse_workload(const json& w, WorkloadParams& p) {
    const std::string path = "workload";
    check_keys(w,
               {"n_sensors", "buffer_size", "n_agg", "quorum_ratio", "resolution_bits", "channels",
                "sampling_rate_hz", "exceed_prob", "lstm_window_s", "q_recent", "q_random",
                "q_scan", "n_clients", "request_rate_hz", "stale_threshold_s", "n_cloud",
                "scan_threshold", "scan_lookback_s"},
               path);
    read(w, "n_sensors", p.n_sensors, path);
    read(w, "buffer_size", p.buffer_size, path);
    read(w, "n_agg", p.n_agg, path);
    read(w, "quorum_ratio", p.quorum_ratio, path);
    read(w, "resolution_bits", p.resolution_bits, path);
    read(w, "channels", p.channels, path);
    read(w, "sampling_rate_hz", p.sampling_rate_hz, path);
    read(w, "exceed_prob", p.exceed_prob, path);
    read(w, "lstm_window_s", p.lstm_window_s, path);
    read(w, "q_recent", p.q_recent, path);
    read(w, "q_random", p.q_random, path);
    read(w, "q_scan", p.q_scan, path);
    read(w, "n_clients", p.n_clients, path);
    read(w, "request_rate_hz", p.request_rate_hz, path);
    read(w, "stale_threshold_s", p.stale_threshold_s, path);
    read(w, "n_cloud", p.n_cloud, path);
    read(w, "scan_threshold", p.scan_threshold, path);
    read(w, "scan_lookback_s", p.scan_lookback_s, path);
}

json compute_json(const ComputeSpec& c) {
    return {{"cpu_cores", c.cpu_cores},
            {"mem_bytes", c.mem_bytes},
            {"disk_bytes", c.disk_bytes},
            {"resource_scale", c.resource_scale}};
}

json link_json(const LinkSpec& l) {
    return {{"delay_per_km_ms", l.delay_per_km_ms}, {"jitter_frac", l.jitter_frac},
            {"bandwidth_bps", l.bandwidth_bps},     {"loss_rate", l.loss_rate},
            {"corrupt_rate", l.corrupt_rate},       {"reorder_rate", l.reorder_rate},
            {"dup_rate", l.dup_rate}};
}

void parse_compute(const json& c, std::map<ComponentClass, ComputeSpec>& table) {
    check_keys(c, {"sensor", "gateway", "onprem", "cloud"}, "compute");
    for (const auto& [name, spec_doc] : c.items()) {
        const std::string path = "compute." + name;
        check_keys(spec_doc, {"cpu_cores", "mem_bytes", "disk_bytes", "resource_scale"}, path);
        ComputeSpec& spec = table[component_class_from_string(name)];
        read(spec_doc, "cpu_cores", spec.cpu_cores, path);
        read(spec_doc, "mem_bytes", spec.mem_bytes, path);
        read(spec_doc, "disk_bytes", spec.disk_bytes, path);
        read(spec_doc, "resource_scale", spec.resource_scale, path);
    }
}

void parse_network(const json& n, std::map<LinkType, LinkSpec>& table) {
    check_keys(n, {"lorawan", "lte_m", "fiber_1g", "fiber_10g"}, "network");
    for (const auto& [name, spec_doc] : n.items()) {
        const std::string path = "network." + name;
        check_keys(spec_doc,
                   {"delay_per_km_ms", "jitter_frac", "bandwidth_bps", "loss_rate", "corrupt_rate",
                    "reorder_rate", "dup_rate"},
                   path);
        LinkSpec& spec = table[link_type_from_string(name)];
        read(spec_doc, "delay_per_km_ms", spec.delay_per_km_ms, path);
        read(spec_doc, "jitter_frac", spec.jitter_frac, path);
        read(spec_doc, "bandwidth_bps", spec.bandwidth_bps, path);
        read(spec_doc, "loss_rate", spec.loss_rate, path);
        read(spec_doc, "corrupt_rate", spec.corrupt_rate, path);
        read(spec_doc, "reorder_rate", spec.reorder_rate, path);
        read(spec_doc, "dup_rate", spec.dup_rate, path);
    }
}

LinkType read_link_type(const json& obj, const std::string& key, const std::string& path) {
    std::string s;
    read(obj, key, s, path);
    try {
        return link_type_from_string(s);
    } catch (const InvalidParameter&) {
        throw ConfigError(path + "." + key + ": unknown link type '" + s + "'");
    }
}

void parse_topology(const json& t, Topology& topo) {
    check_keys(t, {"sites", "onprem_cloud_link", "onprem_cloud_distance_km"}, "topology");
    if (t.contains("sites")) {
        const json& sites = t["sites"];
        if (!sites.is_array()) throw ConfigError("topology.sites: expected an array");
        topo.sites.clear();
        for (std::size_t i = 0; i < sites.size(); ++i) {
            const std::string path = "topology.sites[" + std::to_string(i) + "]";
            const json& s = sites[i];
            check_keys(s,
                       {"site_id", "name", "uplink", "uplink_distance_km", "sensor_link",
                        "sensor_distance_km"},
                       path);
            for (const char* required :
                 {"site_id", "uplink", "uplink_distance_km", "sensor_link", "sensor_distance_km"}) {
                if (!s.contains(required)) {
                    throw ConfigError(path + "." + required + ": missing required key");
                }
            }
            Site site;
            read(s, "site_id", site.site_id, path);
            site.name = "site" + std::to_string(site.site_id);
            read(s, "name", site.name, path);
            site.uplink.link_type = read_link_type(s, "uplink", path);
            read(s, "uplink_distance_km", site.uplink_distance_km, path);
            site.sensor_link.link_type = read_link_type(s, "sensor_link", path);
            read(s, "sensor_distance_km", site.sensor_distance_km, path);
            topo.sites.push_back(std::move(site));
        }
    }
    if (t.contains("onprem_cloud_link")) {
        topo.onprem_cloud_link.link_type = read_link_type(t, "onprem_cloud_link", "topology");
    }
    read(t, "onprem_cloud_distance_km", topo.onprem_cloud_distance_km, "topology");
}

void parse_run(const json& r, RunConfig& c) {
    const std::string path = "run";
    check_keys(r,
               {"seed", "duration_s", "mode", "warmup_frac", "verify", "trace", "out_dir",
                "scale_sensors", "warning_threshold", "mtu_bits", "rto_factor",
                "record_footprint_bytes", "pipeline_delay_s", "c_read", "c_agg", "c_evt", "c_inf",
                "c_ins", "c_q_base", "c_q_per_record", "endpoint", "timeout_s", "pool_size",
                "supports_event_reports", "supports_scan"},
               path);
    read(r, "seed", c.seed, path);
    read(r, "duration_s", c.duration_s, path);
    if (r.contains("mode")) {
        std::string m;
        read(r, "mode", m, path);
        if (m == "sim") {
            c.mode = RunMode::sim;
        } else if (m == "external") {
            c.mode = RunMode::external;
        } else {
            throw ConfigError("run.mode: expected 'sim' or 'external'");
        }
    }
    read(r, "warmup_frac", c.warmup_frac, path);
    read(r, "verify", c.verify, path);
    read(r, "trace", c.trace, path);
    read(r, "out_dir", c.out_dir, path);
    read(r, "scale_sensors", c.scale_sensors, path);
    read(r, "warning_threshold", c.warning_threshold, path);
    read(r, "mtu_bits", c.transport.mtu_bits, path);
    read(r, "rto_factor", c.transport.rto_factor, path);
    read(r, "record_footprint_bytes", c.record_footprint_bytes, path);
    read(r, "pipeline_delay_s", c.pipeline_delay_s, path);
    read(r, "c_read", c.costs.c_read, path);
    read(r, "c_agg", c.costs.c_agg, path);
    read(r, "c_evt", c.costs.c_evt, path);
    read(r, "c_inf", c.costs.c_inf, path);
    read(r, "c_ins", c.costs.c_ins, path);
    read(r, "c_q_base", c.costs.c_q_base, path);
    read(r, "c_q_per_record", c.costs.c_q_per_record, path);
    read(r, "endpoint", c.endpoint, path);
    read(r, "timeout_s", c.timeout_s, path);
    read(r, "pool_size", c.pool_size, path);
    read(r, "supports_event_reports", c.supports_event_reports, path);
    read(r, "supports_scan", c.supports_scan, path);
}

}  // namespace

std::string_view to_string(RunMode m) { return m == RunMode::sim ? "sim" : "external"; }

void apply_class_tables(RunConfig& c) {
    for (auto& s : c.topology.sites) {
        s.gateway_compute = c.compute.at(ComponentClass::gateway);
        s.sensor_compute = c.compute.at(ComponentClass::sensor);
        s.uplink = c.network.at(s.uplink.link_type);
        s.sensor_link = c.network.at(s.sensor_link.link_type);
    }
    c.topology.onprem = c.compute.at(ComponentClass::onprem);
    c.topology.cloud.assign(static_cast<std::size_t>(std::max<std::int64_t>(c.workload.n_cloud, 0)),
                            c.compute.at(ComponentClass::cloud));
    c.topology.onprem_cloud_link = c.network.at(c.topology.onprem_cloud_link.link_type);
}

RunConfig default_config() {
    RunConfig c;
    for (auto cls : {ComponentClass::sensor, ComponentClass::gateway, ComponentClass::onprem,
                     ComponentClass::cloud}) {
        c.compute[cls] = default_compute(cls);
    }
    for (auto t : {LinkType::lorawan, LinkType::lte_m, LinkType::fiber_1g, LinkType::fiber_10g}) {
        c.network[t] = default_link(t);
    }
    c.topology = default_topology(c.workload.n_cloud);
    apply_class_tables(c);
    return c;
}

void RunConfig::validate() const {
    with_field_errors("config", [&] { fogbench::validate(workload); });
    for (const auto& [_, spec] : compute) with_field_errors("config", [&] { fogbench::validate(spec); });
    for (const auto& [_, spec] : network) with_field_errors("config", [&] { fogbench::validate(spec); });
    with_field_errors("config", [&] { fogbench::validate(topology, workload.n_cloud); });
    if (!(duration_s > 0.0)) throw ConfigError("run.duration_s: must be > 0");
    if (!(warmup_frac >= 0.0 && warmup_frac <= 0.5)) {
        throw ConfigError("run.warmup_frac: must be in [0, 0.5]");
    }
    if (!(scale_sensors > 0.0)) throw ConfigError("run.scale_sensors: must be > 0");
    if (!(warning_threshold >= 0.0 && warning_threshold <= 1.0)) {
        throw ConfigError("run.warning_threshold: must be in [0, 1]");
    }
    if (transport.mtu_bits <= 0) throw ConfigError("run.mtu_bits: must be > 0");
    if (transport.rto_factor < 0.0) throw ConfigError("run.rto_factor: must be >= 0");
    if (!(record_footprint_bytes > 0.0)) throw ConfigError("run.record_footprint_bytes: must be > 0");
    if (pipeline_delay_s < 0.0) throw ConfigError("run.pipeline_delay_s: must be >= 0");
    const double costs_list[] = {costs.c_read, costs.c_agg,    costs.c_evt,         costs.c_inf,
                                 costs.c_ins,  costs.c_q_base, costs.c_q_per_record};
    for (double v : costs_list) {
        if (v < 0.0) throw ConfigError("run.c_*: compute costs must be >= 0");
    }
    if (!(timeout_s > 0.0)) throw ConfigError("run.timeout_s: must be > 0");
    if (pool_size < 1) throw ConfigError("run.pool_size: must be >= 1");
    if (workload.channels > static_cast<std::int64_t>(4)) {
        throw ConfigError("workload.channels: at most 4 channels are supported");
    }
}

WorkloadParams RunConfig::effective_workload() const {
    WorkloadParams w = workload;
    w.n_sensors = std::max<std::int64_t>(
        1, static_cast<std::int64_t>(std::llround(static_cast<double>(w.n_sensors) * scale_sensors)));
    return w;
}

RunConfig parse_config(const json& doc) {
    check_keys(doc, {"workload", "compute", "network", "topology", "run"}, "config");
    RunConfig c = default_config();
    if (doc.contains("workload")) parse_workload(doc["workload"], c.workload);
    if (doc.contains("compute")) parse_compute(doc["compute"], c.compute);
    if (doc.contains("network")) parse_network(doc["network"], c.network);
    if (doc.contains("topology")) parse_topology(doc["topology"], c.topology);
    if (doc.contains("run")) parse_run(doc["run"], c);
    apply_class_tables(c);
    c.validate();
    return c;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return parse_config(doc);
}

json to_json(const RunConfig& c) {
    json doc = canonical_json(c);
    doc["run"]["out_dir"] = c.out_dir;
    doc["run"]["trace"] = c.trace;
    return doc;
}

json canonical_json(const RunConfig& c) {
    const WorkloadParams& w = c.workload;
    json doc;
    doc["workload"] = {{"n_sensors", w.n_sensors},
                       {"buffer_size", w.buffer_size},
                       {"n_agg", w.n_agg},
                       {"quorum_ratio", w.quorum_ratio},
                       {"resolution_bits", w.resolution_bits},
                       {"channels", w.channels},
                       {"sampling_rate_hz", w.sampling_rate_hz},
                       {"exceed_prob", w.exceed_prob},
                       {"lstm_window_s", w.lstm_window_s},
                       {"q_recent", w.q_recent},
                       {"q_random", w.q_random},
                       {"q_scan", w.q_scan},
                       {"n_clients", w.n_clients},
                       {"request_rate_hz", w.request_rate_hz},
                       {"stale_threshold_s", w.stale_threshold_s},
                       {"n_cloud", w.n_cloud},
                       {"scan_threshold", w.scan_threshold},
                       {"scan_lookback_s", w.scan_lookback_s}};
    for (const auto& [cls, spec] : c.compute) doc["compute"][std::string(to_string(cls))] = compute_json(spec);
    for (const auto& [type, spec] : c.network) doc["network"][std::string(to_string(type))] = link_json(spec);
    json sites = json::array();
    for (const auto& s : c.topology.sites) {
        sites.push_back({{"site_id", s.site_id},
                         {"name", s.name},
                         {"uplink", std::string(to_string(s.uplink.link_type))},
                         {"uplink_distance_km", s.uplink_distance_km},
                         {"sensor_link", std::string(to_string(s.sensor_link.link_type))},
                         {"sensor_distance_km", s.sensor_distance_km}});
    }
    doc["topology"] = {{"sites", sites},
                       {"onprem_cloud_link",
                        std::string(to_string(c.topology.onprem_cloud_link.link_type))},
                       {"onprem_cloud_distance_km", c.topology.onprem_cloud_distance_km}};
    doc["run"] = {{"seed", c.seed},
                  {"duration_s", c.duration_s},
                  {"mode", std::string(to_string(c.mode))},
                  {"warmup_frac", c.warmup_frac},
                  {"verify", c.verify},
                  {"scale_sensors", c.scale_sensors},
                  {"warning_threshold", c.warning_threshold},
                  {"mtu_bits", c.transport.mtu_bits},
                  {"rto_factor", c.transport.rto_factor},
                  {"record_footprint_bytes", c.record_footprint_bytes},
                  {"pipeline_delay_s", c.pipeline_delay_s},
                  {"c_read", c.costs.c_read},
                  {"c_agg", c.costs.c_agg},
                  {"c_evt", c.costs.c_evt},
                  {"c_inf", c.costs.c_inf},
                  {"c_ins", c.costs.c_ins},
                  {"c_q_base", c.costs.c_q_base},
                  {"c_q_per_record", c.costs.c_q_per_record},
                  {"endpoint", c.endpoint},
                  {"timeout_s", c.timeout_s},
                  {"pool_size", c.pool_size},
                  {"supports_event_reports", c.supports_event_reports},
                  {"supports_scan", c.supports_scan}};
    return doc;
}

std::string config_hash(const RunConfig& c) {
    const std::string text = canonical_json(c).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace fogbench
