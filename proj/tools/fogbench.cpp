// fogbench command line.

#include <csignal>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "fogbench/runner.hpp"

using namespace fogbench;

namespace {

struct Common {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<double> duration;
    std::optional<double> scale_sensors;
    std::optional<std::string> out;

    // workload overrides
    std::optional<std::int64_t> n_sensors, buffer_size, n_agg, resolution_bits, channels, n_clients,
        n_cloud;
    std::optional<double> quorum_ratio, sampling_rate, exceed_prob, lstm_window, q_recent, q_random,
        q_scan, request_rate, stale_threshold;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("-c,--config", c.config_path, "experiment descriptor (JSON)");
    cmd->add_option("--seed", c.seed, "master seed");
    cmd->add_option("--duration", c.duration, "run length in seconds");
    cmd->add_option("--scale-sensors", c.scale_sensors, "multiply N_s per site");
    cmd->add_option("--out", c.out, "output directory");

    auto* g = cmd->add_option_group("workload");
    g->add_option("--n-sensors", c.n_sensors, "sensors per site");
    g->add_option("--buffer-size", c.buffer_size, "sensor buffer, readings");
    g->add_option("--n-agg", c.n_agg, "readings per aggregate");
    g->add_option("--quorum-ratio", c.quorum_ratio, "fraction y of sensors needed for quorum");
    g->add_option("--resolution-bits", c.resolution_bits, "bits per reading");
    g->add_option("--channels", c.channels, "channels per reading");
    g->add_option("--sampling-rate", c.sampling_rate, "readings per second");
    g->add_option("--exceed-prob", c.exceed_prob, "per-reading exceed probability");
    g->add_option("--lstm-window", c.lstm_window, "inference window, seconds");
    g->add_option("--q-recent", c.q_recent, "share of recent_1h queries");
    g->add_option("--q-random", c.q_random, "share of random_1h queries");
    g->add_option("--q-scan", c.q_scan, "share of scan_filter queries");
    g->add_option("--n-clients", c.n_clients, "query clients");
    g->add_option("--request-rate", c.request_rate, "requests per second per client");
    g->add_option("--stale-threshold", c.stale_threshold, "staleness bound, seconds");
    g->add_option("--n-cloud", c.n_cloud, "cloud store instances");
}

RunConfig resolve(const Common& c) {
    RunConfig cfg = c.config_path.empty() ? default_config() : load_config(c.config_path);
    if (c.seed) cfg.seed = *c.seed;
    if (c.duration) cfg.duration_s = *c.duration;
    if (c.scale_sensors) cfg.scale_sensors = *c.scale_sensors;
    if (c.out) cfg.out_dir = *c.out;
    auto& w = cfg.workload;
    auto set = [](auto& field, const auto& v) {
        if (v) field = *v;
    };
    set(w.n_sensors, c.n_sensors);
    set(w.buffer_size, c.buffer_size);
    set(w.n_agg, c.n_agg);
    set(w.quorum_ratio, c.quorum_ratio);
    set(w.resolution_bits, c.resolution_bits);
    set(w.channels, c.channels);
    set(w.sampling_rate_hz, c.sampling_rate);
    set(w.exceed_prob, c.exceed_prob);
    set(w.lstm_window_s, c.lstm_window);
    set(w.q_recent, c.q_recent);
    set(w.q_random, c.q_random);
    set(w.q_scan, c.q_scan);
    set(w.n_clients, c.n_clients);
    set(w.request_rate_hz, c.request_rate);
    set(w.stale_threshold_s, c.stale_threshold);
    set(w.n_cloud, c.n_cloud);
    apply_class_tables(cfg);
    cfg.validate();
    return cfg;
}

std::string fmt_ms(const nlohmann::json& v) {
    if (v.is_null()) return "n/a";
    std::ostringstream os;
    os << std::fixed << std::setprecision(3) << v.get<double>() / 1e6 << " ms";
    return os.str();
}

void print_summary(const RunOutput& out, std::ostream& os) {
    const auto& r = out.report;
    const auto& lat = r["latency"];
    os << "e2e insert p50/p99 (corrected): " << fmt_ms(lat["e2e_insert"]["corrected"]["p50_ns"])
       << " / " << fmt_ms(lat["e2e_insert"]["corrected"]["p99_ns"]) << '\n'
       << "query p50/p99:                  " << fmt_ms(lat["query"]["all"]["p50_ns"]) << " / "
       << fmt_ms(lat["query"]["all"]["p99_ns"]) << '\n'
       << "staleness violation ratio:      "
       << (out.staleness_ratio ? std::to_string(*out.staleness_ratio) : std::string("n/a")) << '\n'
       << "cloud utilization:              " << out.cloud_utilization << '\n'
       << "edge queue stable:              " << (queue_stable(out.edge_queue) ? "yes" : "no") << '\n';
}

int cmd_run(const Common& common, const std::string& mode, bool trace, bool verify,
            const std::optional<std::string>& endpoint) {
    RunConfig cfg = resolve(common);
    if (!mode.empty()) cfg.mode = mode == "external" ? RunMode::external : RunMode::sim;
    if (trace) cfg.trace = true;
    if (verify) cfg.verify = true;
    if (endpoint) cfg.endpoint = *endpoint;
    const std::filesystem::path dir = cfg.out_dir;
    std::filesystem::create_directories(dir);

    RunOutput out;
    if (cfg.mode == RunMode::external) {
        out = run_external(cfg);
    } else {
        std::ofstream trace_file;
        SimulationOptions opt;
        if (cfg.trace) {
            trace_file.open(dir / "trace.csv");
            trace_file << provenance_comment(cfg) << '\n';
            opt.trace = &trace_file;
        }
        out = run_simulation(cfg, opt);
    }
    write_artifacts(out, dir);
    print_summary(out, std::cout);
    std::cout << "report: " << (dir / "report.json").string() << '\n';
    if (cfg.verify && !out.invariant_failures.empty()) {
        for (const auto& f : out.invariant_failures) std::cerr << "verify: " << f << '\n';
        return 1;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fog data-processing benchmark harness"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kToolVersion));

    Common common;

    auto* validate = app.add_subcommand("validate", "check a configuration and print derived rates");
    add_common(validate, common);

    std::string mode;
    bool trace = false, verify = false;
    std::optional<std::string> endpoint;
    auto* run = app.add_subcommand("run", "run one experiment");
    add_common(run, common);
    run->add_option("--mode", mode, "sim or external")->check(CLI::IsMember({"sim", "external"}));
    run->add_flag("--trace", trace, "write the event trace");
    run->add_flag("--verify", verify, "check results against brute-force oracles");
    run->add_option("--endpoint", endpoint, "host:port of the external SUT");

    std::optional<std::string> gen_out;
    bool no_readings = false, no_queries = false;
    auto* generate = app.add_subcommand("generate", "emit the offline workload as NDJSON");
    add_common(generate, common);
    generate->add_option("-o,--output", gen_out, "file to write (default stdout)");
    generate->add_flag("--no-readings", no_readings, "omit readings and aggregates");
    generate->add_flag("--no-queries", no_queries, "omit queries");

    double lo = 0.25, hi = 4.0, tol = 0.05;
    std::optional<std::string> probe_log;
    auto* slo = app.add_subcommand("slo-search", "minimal edge resource scale with stable queues");
    add_common(slo, common);
    slo->add_option("--lo", lo, "lower resource scale");
    slo->add_option("--hi", hi, "upper resource scale");
    slo->add_option("--tol", tol, "relative tolerance");
    slo->add_option("--probe-log", probe_log, "JSON-lines probe log (resumes when present)");

    double target = 0.6, cal_tol = 0.02;
    std::optional<double> rate_lo, rate_hi;
    auto* cal = app.add_subcommand("calibrate", "request rate for a target cloud utilization");
    add_common(cal, common);
    cal->add_option("--target", target, "target mean cloud busy fraction, in (0, 1)");
    cal->add_option("--tol", cal_tol, "absolute utilization tolerance");
    cal->add_option("--rate-lo", rate_lo, "lowest per-client rate to consider");
    cal->add_option("--rate-hi", rate_hi, "highest per-client rate to consider");

    std::string host = "127.0.0.1";
    int port = 7070;
    auto* serve = app.add_subcommand("serve", "host the reference store over the wire protocol");
    add_common(serve, common);
    serve->add_option("--host", host, "bind address");
    serve->add_option("--port", port, "TCP port (0 = ephemeral)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*validate) {
            const auto report = validate_rates(resolve(common));
            print_validation(report, std::cout);
            return 0;
        }
        if (*run) return cmd_run(common, mode, trace, verify, endpoint);
        if (*generate) {
            const RunConfig cfg = resolve(common);
            if (gen_out) {
                std::ofstream f(*gen_out);
                if (!f) throw std::runtime_error("cannot write " + *gen_out);
                generate_stream(cfg, f, !no_readings, !no_queries);
            } else {
                generate_stream(cfg, std::cout, !no_readings, !no_queries);
            }
            return 0;
        }
        if (*slo) {
            const RunConfig cfg = resolve(common);
            std::optional<std::filesystem::path> log;
            if (probe_log) log = *probe_log;
            const auto res = slo_search_run(cfg, lo, hi, tol, log, &std::cout);
            if (!res.ok) {
                std::cerr << "slo-search: " << res.error << '\n';
                return 1;
            }
            std::cout << "min_scale " << res.min_scale << " after " << res.probes.size() << " probes\n";
            return 0;
        }
        if (*cal) {
            const RunConfig cfg = resolve(common);
            const double base = cfg.workload.request_rate_hz;
            const std::filesystem::path derived = std::filesystem::path(cfg.out_dir) / "calibrated.json";
            const auto res = calibrate_run(cfg, target, cal_tol, rate_lo.value_or(base / 100.0),
                                           rate_hi.value_or(base * 100.0), derived, &std::cout);
            if (!res.ok) {
                std::cerr << "calibrate: " << res.error << '\n';
                return 1;
            }
            std::cout << "request_rate_hz " << res.rate << " utilization " << res.utilization << '\n'
                      << "config: " << derived.string() << '\n';
            return 0;
        }
        if (*serve) {
            const RunConfig cfg = resolve(common);
            std::vector<int> ids;
            for (const auto& s : cfg.topology.sites) ids.push_back(s.site_id);
            TimeSeriesStore store(static_cast<int>(cfg.topology.cloud.size()), ids,
                                  cfg.topology.cloud.front().effective_disk_bytes(),
                                  cfg.workload.scan_threshold);
            SutServer server(store, host, port);
            server.start();
            std::cout << "listening on " << host << ':' << server.port() << std::endl;
            server.wait();
            return 0;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const InvalidParameter& e) {
        std::cerr << "invalid parameter: " << e.what() << '\n';
        return 2;
    } catch (const SutUnreachable& e) {
        std::cerr << "sut unreachable: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
