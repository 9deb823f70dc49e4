// validate, generate, slo-search and calibrate.

#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <queue>
#include <sstream>

#include "fogbench/runner.hpp"
#include "fogbench/wire.hpp"
#include "fogbench/workload.hpp"

namespace fogbench {

using nlohmann::json;

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Must match the streams of the simulated run so that generated data is
// the data a run with the same seed consumes.
Rng stream(std::uint64_t seed, std::uint64_t id) { return Rng(splitmix64(seed ^ splitmix64(id))); }

std::string human_bps(double bps) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(2);
    if (bps >= 1e9) os << bps / 1e9 << " Gbit/s";
    else if (bps >= 1e6) os << bps / 1e6 << " Mbit/s";
    else if (bps >= 1e3) os << bps / 1e3 << " kbit/s";
    else os << bps << " bit/s";
    return os.str();
}

RunConfig probe_config(const RunConfig& base) {
    RunConfig c = base;
    c.verify = false;
    c.trace = false;
    return c;
}

}  // namespace

ValidationReport validate_rates(const RunConfig& config) {
    config.validate();
    ValidationReport r;
    const WorkloadParams wl = config.effective_workload();
    const auto& topo = config.topology;
    r.rates = derived_rates(wl, topo.sites.size());

    for (const auto& s : topo.sites) {
        const std::string name = s.name.empty() ? "site " + std::to_string(s.site_id) : s.name;
        r.links.push_back({name + " sensor->gateway (" + std::string(to_string(s.sensor_link.link_type)) + ")",
                           r.rates.mean_sensor_gateway_bps, s.sensor_link.bandwidth_bps});
        r.links.push_back({name + " gateway->onprem (" + std::string(to_string(s.uplink.link_type)) + ")",
                           r.rates.edge_ingress_bps, s.uplink.bandwidth_bps});
    }
    r.links.push_back({"onprem->cloud (" + std::string(to_string(topo.onprem_cloud_link.link_type)) + ")",
                       r.rates.edge_ingress_bps * static_cast<double>(topo.sites.size()),
                       topo.onprem_cloud_link.bandwidth_bps});
    for (const auto& l : r.links) {
        if (!l.feasible()) {
            r.warnings.push_back("infeasible link " + l.link + ": demand " + human_bps(l.demand_bps) +
                                 " exceeds capacity " + human_bps(l.capacity_bps));
        }
    }
    return r;
}

void print_validation(const ValidationReport& report, std::ostream& out) {
    const auto& r = report.rates;
    out << std::setprecision(6);
    out << "raw rate per sensor:          " << human_bps(r.raw_rate_bps) << '\n'
        << "quorum probability per tick:  " << r.quorum_probability << '\n'
        << "triggers per site:            " << r.trigger_rate_per_site_hz << " /s\n"
        << "mean sensor-gateway bandwidth: " << human_bps(r.mean_sensor_gateway_bps) << '\n'
        << "edge ingress per site:        " << human_bps(r.edge_ingress_bps) << '\n'
        << "aggregates per site:          " << r.aggregate_rate_per_site_hz << " /s\n"
        << "cloud inserts:                " << r.total_insert_rate_hz << " /s\n"
        << "queries:                      " << r.query_rate_hz << " /s\n";
    for (const auto& l : report.links) {
        out << (l.feasible() ? "  ok          " : "  INFEASIBLE  ") << l.link << ": "
            << human_bps(l.demand_bps) << " of " << human_bps(l.capacity_bps) << '\n';
    }
    for (const auto& w : report.warnings) out << "warning: " << w << '\n';
}

void generate_stream(const RunConfig& config, std::ostream& out, bool readings, bool queries) {
    config.validate();
    const WorkloadParams wl = config.effective_workload();
    const SimTime duration = seconds_to_ns(config.duration_s);
    Rng rng_gen = stream(config.seed, 1);
    Rng rng_query = stream(config.seed, 3);

    out << json{{"type", "header"},
                {"tool", kToolName},
                {"version", kToolVersion},
                {"config_hash", config_hash(config)},
                {"seed", config.seed}}
               .dump()
        << '\n';

    std::vector<SensorState> sensors;
    for (const auto& s : config.topology.sites) {
        for (std::int64_t j = 0; j < wl.n_sensors; ++j) sensors.emplace_back(s.site_id, static_cast<int>(j), wl);
    }
    std::vector<ClientState> clients(static_cast<std::size_t>(wl.n_clients));
    for (std::size_t c = 0; c < clients.size(); ++c) clients[c].client_id = static_cast<int>(c);

    // (time, client, m) in issue order
    using Pending = std::tuple<SimTime, std::size_t, std::int64_t>;
    std::priority_queue<Pending, std::vector<Pending>, std::greater<>> due;
    auto query_time = [&](std::size_t c, std::int64_t m) {
        const double period = 1e9 / wl.request_rate_hz;
        const double phase = static_cast<double>(c) / static_cast<double>(clients.size());
        return static_cast<SimTime>(std::llround((phase + static_cast<double>(m)) * period));
    };
    if (queries && wl.request_rate_hz > 0.0) {
        for (std::size_t c = 0; c < clients.size(); ++c) {
            if (query_time(c, 0) < duration) due.emplace(query_time(c, 0), c, 0);
        }
    }
    auto flush_queries = [&](SimTime until) {
        while (!due.empty() && std::get<0>(due.top()) < until) {
            auto [t, c, m] = due.top();
            due.pop();
            json j = wire::to_json(next_query(clients[c], wl, rng_query, t, 0));
            j["type"] = "query";
            out << j.dump() << '\n';
            if (query_time(c, m + 1) < duration) due.emplace(query_time(c, m + 1), c, m + 1);
        }
    };

    for (std::int64_t k = 0;; ++k) {
        const auto t = static_cast<SimTime>(std::llround(static_cast<double>(k) * 1e9 / wl.sampling_rate_hz));
        if (t >= duration) break;
        flush_queries(t);
        if (!readings) continue;
        for (auto& sensor : sensors) {
            const SensorReading r = next_reading(sensor, t, rng_gen);
            json channels = json::array();
            for (std::size_t c = 0; c < sensor.channels; ++c) channels.push_back(dequantize(r.channels[c]));
            out << json{{"type", "reading"}, {"site_id", r.site_id}, {"sensor_id", r.sensor_id},
                        {"seq", r.seq},      {"gen_time", r.gen_time}, {"channels", channels},
                        {"exceeds", r.exceeds}}
                       .dump()
                << '\n';
            if (auto agg = maybe_aggregate(sensor, r)) {
                const std::vector<double> means(agg->channel_means.begin(),
                                                agg->channel_means.begin() +
                                                    static_cast<std::ptrdiff_t>(sensor.channels));
                out << json{{"type", "aggregate"},  {"site_id", agg->site_id},
                            {"sensor_id", agg->sensor_id}, {"window_seq", agg->window_seq},
                            {"gen_time", agg->gen_time},   {"channel_means", means},
                            {"size_bits", agg->size_bits}}
                           .dump()
                    << '\n';
            }
        }
    }
    flush_queries(duration);
}

// ---------------------------------------------------------------------------

QueueObservation edge_probe(const RunConfig& config, double scale) {
    RunConfig c = probe_config(config);
    c.compute.at(ComponentClass::sensor).resource_scale = scale;
    c.compute.at(ComponentClass::gateway).resource_scale = scale;
    apply_class_tables(c);
    SimulationOptions opt;
    opt.record_samples = false;
    return run_simulation(c, opt).edge_queue;
}

SloSearchResult slo_search_run(const RunConfig& config, double lo, double hi, double tol,
                               const std::optional<std::filesystem::path>& probe_log,
                               std::ostream* log) {
    config.validate();
    const std::string hash = config_hash(config);
    std::vector<SloProbe> prior;
    if (probe_log && std::filesystem::exists(*probe_log)) {
        std::ifstream in(*probe_log);
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty()) continue;
            json j;
            try {
                j = json::parse(line);
            } catch (const json::exception&) {
                // A run interrupted mid-write leaves a torn last line.
                continue;
            }
            if (j.value("config_hash", "") != hash) {
                throw ConfigError(probe_log->string() + ":" + std::to_string(lineno) +
                                  ": probe belongs to a different configuration");
            }
            prior.push_back({j.at("scale").get<double>(), j.at("stable").get<bool>(), true});
        }
    }
    std::ofstream append;
    if (probe_log) {
        append.open(*probe_log, std::ios::app);
        if (!append) throw std::runtime_error("cannot write " + probe_log->string());
    }
    auto probe = [&](double scale) {
        const QueueObservation obs = edge_probe(config, scale);
        const bool stable = queue_stable(obs);
        if (append) {
            append << json{{"config_hash", hash},
                           {"seed", config.seed},
                           {"version", kToolVersion},
                           {"scale", scale},
                           {"stable", stable},
                           {"first_half_avg", obs.first_half_avg},
                           {"second_half_avg", obs.second_half_avg},
                           {"drops", obs.drops}}
                          .dump()
                   << std::endl;
        }
        if (log) {
            *log << "probe scale=" << std::setprecision(10) << scale
                 << (stable ? " stable" : " unstable") << " first_half=" << obs.first_half_avg
                 << " second_half=" << obs.second_half_avg << " drops=" << obs.drops << '\n';
        }
        return stable;
    };
    return slo_search(probe, lo, hi, tol, prior);
}

double cloud_utilization_at(const RunConfig& config, double request_rate_hz) {
    RunConfig c = probe_config(config);
    c.workload.request_rate_hz = request_rate_hz;
    SimulationOptions opt;
    opt.record_samples = false;
    return run_simulation(c, opt).cloud_utilization;
}

CalibrationResult calibrate_run(const RunConfig& config, double target, double tol, double rate_lo,
                                double rate_hi,
                                const std::optional<std::filesystem::path>& derived_config,
                                std::ostream* log) {
    config.validate();
    auto measure = [&](double rate) {
        const double u = cloud_utilization_at(config, rate);
        if (log) {
            *log << "probe rate=" << std::setprecision(10) << rate << " utilization=" << u << '\n';
        }
        return u;
    };
    CalibrationResult result = calibrate_request_rate(measure, target, tol, rate_lo, rate_hi);
    if (result.ok && derived_config) {
        RunConfig c = config;
        c.workload.request_rate_hz = result.rate;
        if (derived_config->has_parent_path()) {
            std::filesystem::create_directories(derived_config->parent_path());
        }
        std::ofstream f(*derived_config);
        if (!f) throw std::runtime_error("cannot write " + derived_config->string());
        f << to_json(c).dump(2) << '\n';
    }
    return result;
}

}  // namespace fogbench
