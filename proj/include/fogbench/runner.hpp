// Experiment orchestration: simulated runs, external wall-clock runs,
// report/artifact output, and the validate, generate, slo-search and
// calibrate procedures behind the CLI.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fogbench/adapter.hpp"
#include "fogbench/config.hpp"
#include "fogbench/metrics.hpp"

namespace fogbench {

inline constexpr const char* kToolName = "fogbench";
inline constexpr const char* kToolVersion = "1.0.0";
inline constexpr int kReportSchemaVersion = 1;

struct RunCounters {
    std::int64_t readings = 0;           // post warm-up
    std::int64_t exceed_readings = 0;    // post warm-up
    std::int64_t aggregates_created = 0;
    std::int64_t aggregates_inserted = 0;
    std::int64_t drops_sensor = 0;
    std::int64_t drops_gateway = 0;
    std::int64_t drops_onprem = 0;
    std::int64_t drops_cloud = 0;
    std::int64_t triggers = 0;
    std::int64_t event_reports_delivered = 0;
    std::int64_t queries_issued = 0;
    std::array<std::int64_t, 3> queries_by_kind{};
    std::int64_t query_failures = 0;
    std::int64_t ingest_failures = 0;
    std::int64_t event_ingest_failures = 0;
    std::int64_t warnings = 0;
    std::int64_t evictions = 0;
    std::int64_t verified_queries = 0;
    std::int64_t verification_mismatches = 0;
};

struct QueryDigest {
    std::uint64_t query_id = 0;
    std::int64_t count = 0;
    std::uint64_t digest = 0;
    bool ok = true;
};

struct SimulationOptions {
    std::ostream* trace = nullptr;
    /// Replaces the in-process reference binding (e.g. a loopback RemoteSut).
    Sut* sut = nullptr;
    bool record_samples = true;
    /// Materialize every query result and keep its digest.
    bool capture_results = false;
};

struct RunOutput {
    nlohmann::json report;
    std::vector<LatencySample> samples;  // post warm-up
    RunCounters counters;
    QueueObservation edge_queue;
    double cloud_utilization = 0.0;
    double sensor_gateway_payload_bps = 0.0;  // per sensor, post warm-up
    double exceed_fraction = 0.0;
    std::optional<double> staleness_ratio;
    std::vector<QueryDigest> results;
    std::vector<std::string> invariant_failures;  // populated when verify is on
};

/// Deterministic simulated run of the full pipeline.
RunOutput run_simulation(const RunConfig& config, const SimulationOptions& options = {});

/// Wall-clock run against the external SUT at config.endpoint. Throws
/// SutUnreachable before any data is generated if the SUT cannot be reached.
RunOutput run_external(const RunConfig& config);

/// Writes report.json and samples.csv into `dir`.
void write_artifacts(const RunOutput& out, const std::filesystem::path& dir);

std::string samples_csv(const std::vector<LatencySample>& samples);

/// "# fogbench <version> config_hash=<hash> seed=<seed>", the first line of
/// every text artifact.
std::string provenance_comment(const RunConfig& config);

// ---------------------------------------------------------------------------

struct LinkDemand {
    std::string link;
    double demand_bps = 0.0;
    double capacity_bps = 0.0;
    bool feasible() const { return demand_bps <= capacity_bps; }
};

struct ValidationReport {
    RateSummary rates;
    std::vector<LinkDemand> links;
    std::vector<std::string> warnings;
};

ValidationReport validate_rates(const RunConfig& config);
void print_validation(const ValidationReport& report, std::ostream& out);

/// Emits readings, aggregates and queries as newline-delimited JSON.
void generate_stream(const RunConfig& config, std::ostream& out, bool readings = true,
                     bool queries = true);

/// Minimal resource scale of the sensor and gateway compute keeping edge
/// queues stable. Probes are appended to `probe_log` (JSON lines) and
/// reused from it when it already exists.
SloSearchResult slo_search_run(const RunConfig& config, double lo, double hi, double tol,
                               const std::optional<std::filesystem::path>& probe_log = std::nullopt,
                               std::ostream* log = nullptr);

/// Edge queue stability of one probe at `scale`.
QueueObservation edge_probe(const RunConfig& config, double scale);

/// Request rate yielding target cloud utilization; when `derived_config` is
/// given, writes the calibrated configuration there.
CalibrationResult calibrate_run(const RunConfig& config, double target, double tol,
                                double rate_lo, double rate_hi,
                                const std::optional<std::filesystem::path>& derived_config =
                                    std::nullopt,
                                std::ostream* log = nullptr);

double cloud_utilization_at(const RunConfig& config, double request_rate_hz);

}  // namespace fogbench
