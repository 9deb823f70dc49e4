// Acceptance suite: one PASS/FAIL line per criterion, tolerances pinned
// here. Exit status is the number of failed criteria.

#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include "fogbench/runner.hpp"

using namespace fogbench;
namespace fs = std::filesystem;

namespace {

constexpr double kRateTol = 0.01;         // relative, analytical rates
constexpr double kQuorumTol = 1e-12;      // absolute, quorum tail
constexpr double kBandwidthTol = 0.05;    // relative, measured vs model bandwidth
constexpr double kExceedTol = 0.005;      // absolute, exceed fraction
constexpr double kOffsetTolNs = 1000.0;   // 1 us
constexpr double kStaleHigh = 0.99;
constexpr double kSloUpper = 1.05;
constexpr double kCalTarget = 0.80;
constexpr double kCalTol = 0.05;
constexpr double kMixTol = 0.02;
constexpr double kAcceptanceScale = 0.1;  // sensors per site scaled for runtime

int failures = 0;

void report(const std::string& name, bool ok, const std::string& detail) {
    std::cout << (ok ? "PASS " : "FAIL ") << name << ": " << detail << std::endl;
    if (!ok) ++failures;
}

void guarded(const std::string& name, const std::function<void()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
        body();
    } catch (const std::exception& e) {
        report(name, false, std::string("exception: ") + e.what());
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cerr << "  (" << name << " took " << s << " s)\n";
}

std::string fmt(double v, int prec = 6) {
    std::ostringstream os;
    os.precision(prec);
    os << v;
    return os.str();
}

bool within_rel(double got, double want, double tol) { return std::abs(got - want) <= tol * std::abs(want); }

RunConfig scaled(double duration) {
    RunConfig c = default_config();
    c.duration_s = duration;
    c.scale_sensors = kAcceptanceScale;
    apply_class_tables(c);
    c.validate();
    return c;
}

// Sensor links wide enough that aggregates and dumps are not stuck behind
// a saturated LoRaWAN hop.
void widen_sensor_links(RunConfig& c) {
    c.network[LinkType::lorawan].bandwidth_bps = 100e6;
    apply_class_tables(c);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

double json_num(const nlohmann::json& j) { return j.is_null() ? NAN : j.get<double>(); }

// ---------------------------------------------------------------------------

void analytical_fidelity() {
    const ValidationReport v = validate_rates(default_config());
    const bool raw = v.rates.raw_rate_bps == 19200.0;
    const bool bw = within_rel(v.rates.mean_sensor_gateway_bps, 149.5e3, kRateTol);
    const bool edge = within_rel(v.rates.edge_ingress_bps, 44.84e6, kRateTol);
    report("analytical_fidelity", raw && bw && edge,
           "raw=" + fmt(v.rates.raw_rate_bps) + " bps, sensor->gateway=" +
               fmt(v.rates.mean_sensor_gateway_bps) + " bps, edge ingress=" +
               fmt(v.rates.edge_ingress_bps) + " bps");
}

void quorum_oracle() {
    // y = a / b so the oracle's bound ceil(n * y) is integer arithmetic
    const std::pair<int, int> ys[] = {{1, 10}, {1, 4}, {1, 2}};
    const double ps[] = {0.1, 0.3, 0.7};
    double worst = 0.0;
    int cases = 0;
    for (int n = 1; n <= 20; ++n) {
        for (auto [a, b] : ys) {
            const int bound = (n * a + b - 1) / b;
            const double y = static_cast<double>(a) / b;
            for (double p : ps) {
                long double tail = 0.0L;
                const long double lp = p, lq = 1.0L - lp;
                for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
                    const int k = std::popcount(mask);
                    if (k > bound) tail += std::pow(lp, k) * std::pow(lq, n - k);
                }
                worst = std::max(worst, std::abs(quorum_probability(n, y, p) - static_cast<double>(tail)));
                ++cases;
            }
        }
    }
    report("quorum_oracle", worst <= kQuorumTol,
           std::to_string(cases) + " cases, max abs error " + fmt(worst, 3));
}

void convergence() {
    const RunConfig c = scaled(300.0);
    const RunOutput out = run_simulation(c);
    const double model = mean_sensor_gateway_bandwidth(c.effective_workload());
    const double measured = out.sensor_gateway_payload_bps;
    const bool bw = within_rel(measured, model, kBandwidthTol);
    const bool ex = std::abs(out.exceed_fraction - c.workload.exceed_prob) <= kExceedTol;
    report("sim_model_convergence", bw && ex,
           "bandwidth " + fmt(measured) + " vs model " + fmt(model) + " bps (" +
               fmt(100.0 * (measured / model - 1.0), 3) + "%), exceed fraction " +
               fmt(out.exceed_fraction, 5));
}

void determinism() {
    const RunConfig c = scaled(120.0);
    const fs::path base = fs::temp_directory_path() / "fogbench_acceptance_det";
    fs::remove_all(base);
    fs::create_directories(base / "a");
    fs::create_directories(base / "b");
    const RunOutput a = run_simulation(c);
    write_artifacts(a, base / "a");
    write_artifacts(run_simulation(c), base / "b");
    const bool same = slurp(base / "a" / "report.json") == slurp(base / "b" / "report.json") &&
                      slurp(base / "a" / "samples.csv") == slurp(base / "b" / "samples.csv");

    RunConfig d = c;
    d.seed = c.seed + 1000;
    const RunOutput other = run_simulation(d);
    const bool differ = samples_csv(other.samples) != samples_csv(a.samples);
    const double model = mean_sensor_gateway_bandwidth(c.effective_workload());
    const bool bw = within_rel(other.sensor_gateway_payload_bps, model, kBandwidthTol);
    report("determinism", same && differ && bw,
           std::string("identical report.json: ") + (same ? "yes" : "no") +
               ", other seed changes samples: " + (differ ? "yes" : "no") +
               ", other seed bandwidth " + fmt(other.sensor_gateway_payload_bps) + " vs model " + fmt(model));
    fs::remove_all(base);
}

void offset_correction() {
    RunConfig c = scaled(60.0);
    for (auto& [type, spec] : c.network) {
        spec.jitter_frac = 0.0;
        spec.loss_rate = spec.corrupt_rate = spec.reorder_rate = spec.dup_rate = 0.0;
    }
    c.workload.exceed_prob = 0.0;
    c.costs.c_q_base = 0.0;
    c.costs.c_q_per_record = 0.0;
    apply_class_tables(c);

    RunConfig far = c;
    const double delta_ms = 10.0;
    for (auto& s : far.topology.sites) {
        s.sensor_distance_km += delta_ms / s.sensor_link.delay_per_km_ms;
        s.uplink_distance_km += delta_ms / s.uplink.delay_per_km_ms;
    }
    far.topology.onprem_cloud_distance_km += delta_ms / far.topology.onprem_cloud_link.delay_per_km_ms;

    const RunOutput a = run_simulation(c);
    const RunOutput b = run_simulation(far);
    const auto& ea = a.report["latency"]["e2e_insert"];
    const auto& eb = b.report["latency"]["e2e_insert"];
    const double raw_shift = json_num(eb["raw"]["p50_ns"]) - json_num(ea["raw"]["p50_ns"]);
    const double corr_shift = json_num(eb["corrected"]["p50_ns"]) - json_num(ea["corrected"]["p50_ns"]);
    const double path_delta = 3 * delta_ms * 1e6;
    const bool ok = std::abs(raw_shift - path_delta) <= kOffsetTolNs && std::abs(corr_shift) <= kOffsetTolNs;
    report("offset_correction", ok,
           "raw p50 shift " + fmt(raw_shift / 1e6, 9) + " ms (path delta " + fmt(path_delta / 1e6) +
               " ms), corrected p50 shift " + fmt(corr_shift, 6) + " ns");
}

void staleness() {
    RunConfig c = scaled(60.0);
    c.workload.exceed_prob = 0.0;
    c.costs = CostModel{0, 0, 0, 0, 0, 0, 0};
    apply_class_tables(c);
    const RunOutput fresh = run_simulation(c);

    RunConfig late = c;
    late.pipeline_delay_s = 10.0;
    const RunOutput delayed = run_simulation(late);

    const bool ok = fresh.staleness_ratio && *fresh.staleness_ratio == 0.0 && delayed.staleness_ratio &&
                    *delayed.staleness_ratio >= kStaleHigh && c.workload.stale_threshold_s == 5.0;
    report("staleness_semantics", ok,
           "ratio without delay " + (fresh.staleness_ratio ? fmt(*fresh.staleness_ratio) : "n/a") +
               ", with 10 s pipeline delay " +
               (delayed.staleness_ratio ? fmt(*delayed.staleness_ratio) : "n/a") + " (t_stale " +
               fmt(c.workload.stale_threshold_s) + " s)");
}

void slo_search_check() {
    RunConfig c = scaled(60.0);
    c.workload.exceed_prob = 0.0;
    c.costs.c_read = 0.0;
    // gateway load = N_s * (f / N_agg) * c_agg core-s per second; equal to its cores at scale 1
    const WorkloadParams w = c.effective_workload();
    const double agg_rate = static_cast<double>(w.n_sensors) * w.sampling_rate_hz / static_cast<double>(w.n_agg);
    c.costs.c_agg = c.compute.at(ComponentClass::gateway).cpu_cores / agg_rate;
    apply_class_tables(c);

    const double lo = 0.5, hi = 2.0, tol = 0.05;
    const SloSearchResult r = slo_search_run(c, lo, hi, tol);
    const auto bound = slo_probe_bound(lo, hi, tol);
    const bool ok = r.ok && r.min_scale > 1.0 && r.min_scale <= kSloUpper &&
                    static_cast<std::int64_t>(r.probes.size()) <= bound;
    report("slo_search", ok,
           (r.ok ? "min scale " + fmt(r.min_scale, 8) : "error: " + r.error) + " after " +
               std::to_string(r.probes.size()) + " probes (bound " + std::to_string(bound) + ")");
}

void calibration() {
    RunConfig c = scaled(60.0);
    // per-instance load = n_clients * R * c_q_base / cores: linear in R, 0.8 at R = 1
    c.workload.n_clients = 100;
    c.costs.c_q_per_record = 0.0;
    c.costs.c_q_base = kCalTarget * c.compute.at(ComponentClass::cloud).cpu_cores / 100.0;
    apply_class_tables(c);

    const CalibrationResult r = calibrate_run(c, kCalTarget, 0.02, 0.01, 100.0);
    double rerun = NAN;
    if (r.ok) rerun = cloud_utilization_at(c, r.rate);
    const bool ok = r.ok && std::abs(r.utilization - kCalTarget) <= kCalTol &&
                    std::abs(rerun - kCalTarget) <= kCalTol;
    report("calibration", ok,
           (r.ok ? "rate " + fmt(r.rate) + " Hz/client, utilization " + fmt(r.utilization) +
                       ", rerun " + fmt(rerun)
                 : "error: " + r.error) +
               ", " + std::to_string(r.probes.size()) + " probes");
}

void query_mix() {
    RunConfig c = scaled(100.0);
    c.workload.n_clients = 100;
    c.workload.request_rate_hz = 1.0;
    c.verify = true;
    widen_sensor_links(c);
    const RunOutput out = run_simulation(c);
    const auto& k = out.counters;
    const double n = static_cast<double>(k.queries_issued);
    const double fr[3] = {k.queries_by_kind[0] / n, k.queries_by_kind[1] / n, k.queries_by_kind[2] / n};
    const double want[3] = {0.5, 0.3, 0.2};
    bool mix = n >= 10000;
    for (int i = 0; i < 3; ++i) mix = mix && std::abs(fr[i] - want[i]) <= kMixTol;
    const bool verified = k.verified_queries == k.queries_issued - k.query_failures &&
                          k.verification_mismatches == 0 && out.invariant_failures.empty() &&
                          k.aggregates_inserted > 0;
    report("query_mix_and_correctness", mix && verified,
           std::to_string(k.queries_issued) + " queries, mix " + fmt(fr[0], 4) + "/" + fmt(fr[1], 4) +
               "/" + fmt(fr[2], 4) + ", verified " + std::to_string(k.verified_queries) +
               ", mismatches " + std::to_string(k.verification_mismatches) + ", invariant failures " +
               std::to_string(out.invariant_failures.size()));
}

void adapter_equivalence() {
    RunConfig c = scaled(30.0);
    widen_sensor_links(c);

    SimulationOptions local;
    local.capture_results = true;
    const RunOutput a = run_simulation(c, local);

    std::vector<int> ids;
    for (const auto& s : c.topology.sites) ids.push_back(s.site_id);
    TimeSeriesStore store(static_cast<int>(c.topology.cloud.size()), ids,
                          c.topology.cloud.front().effective_disk_bytes(), c.workload.scan_threshold);
    SutServer server(store, "127.0.0.1", 0);
    server.start();
    RemoteSut remote({"127.0.0.1", server.port()}, 4, 10.0, {false, true});
    SimulationOptions loop;
    loop.capture_results = true;
    loop.sut = &remote;
    const RunOutput b = run_simulation(c, loop);
    server.stop();

    bool same = a.results.size() == b.results.size() && !a.results.empty();
    std::size_t diffs = 0, nonempty = 0;
    for (std::size_t i = 0; same && i < a.results.size(); ++i) {
        const auto& x = a.results[i];
        const auto& y = b.results[i];
        if (x.query_id != y.query_id || x.count != y.count || x.digest != y.digest || !x.ok || !y.ok) ++diffs;
        if (x.count > 0) ++nonempty;
    }
    same = same && diffs == 0 && nonempty > 0;
    report("adapter_equivalence", same,
           std::to_string(a.results.size()) + " vs " + std::to_string(b.results.size()) +
               " results, " + std::to_string(nonempty) + " non-empty, " + std::to_string(diffs) +
               " differing");
}

}  // namespace

int main() {
    guarded("analytical_fidelity", analytical_fidelity);
    guarded("quorum_oracle", quorum_oracle);
    guarded("sim_model_convergence", convergence);
    guarded("determinism", determinism);
    guarded("offset_correction", offset_correction);
    guarded("staleness_semantics", staleness);
    guarded("slo_search", slo_search_check);
    guarded("calibration", calibration);
    guarded("query_mix_and_correctness", query_mix);
    guarded("adapter_equivalence", adapter_equivalence);
    std::cout << (failures == 0 ? "ALL PASS" : std::to_string(failures) + " FAILED") << std::endl;
    return failures;
}
