// Experiment descriptor: workload, compute, network and topology
// parameters plus run settings, loaded from a single JSON document with
// sections `workload`, `compute`, `network`, `topology` and `run`.
// Every section is optional and overrides the built-in defaults key by
// key; unknown keys are rejected.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "fogbench/link.hpp"
#include "fogbench/model.hpp"

namespace fogbench {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class RunMode { sim, external };

std::string_view to_string(RunMode m);

/// Per-operation compute costs in core-seconds.
struct CostModel {
    double c_read = 0.0;           // sensor, per reading
    double c_agg = 10e-6;          // gateway, per aggregate
    double c_evt = 0.0;            // gateway, per event report
    double c_inf = 1e-3;           // on-premise, per aggregate
    double c_ins = 10e-6;          // cloud instance, per insert
    double c_q_base = 1e-3;        // cloud instance, per query share
    double c_q_per_record = 1e-8;  // cloud instance, per record touched
};

struct RunConfig {
    WorkloadParams workload;
    std::map<ComponentClass, ComputeSpec> compute;
    std::map<LinkType, LinkSpec> network;
    Topology topology;

    std::uint64_t seed = 42;
    double duration_s = 300.0;
    RunMode mode = RunMode::sim;
    double warmup_frac = 0.10;
    CostModel costs;
    bool verify = false;
    bool trace = false;
    std::string out_dir = "out";
    double scale_sensors = 1.0;
    double warning_threshold = 0.95;
    TransportParams transport;
    double record_footprint_bytes = 1024.0;
    double pipeline_delay_s = 0.0;  // extra hold at the on-premise node

    // external mode
    std::string endpoint = "127.0.0.1:7070";
    double timeout_s = 5.0;
    int pool_size = 8;
    bool supports_event_reports = false;
    bool supports_scan = true;

    /// Throws ConfigError with a field-qualified message.
    void validate() const;

    /// Workload after applying scale_sensors (at least one sensor per site).
    WorkloadParams effective_workload() const;
};

/// Built-in defaults: reference workload, capacities, links and the six-site topology.
RunConfig default_config();

/// Parses a configuration document on top of the defaults.
RunConfig parse_config(const nlohmann::json& doc);
RunConfig load_config(const std::filesystem::path& path);

/// Full canonical document; parse_config(to_json(c)) reproduces c.
nlohmann::json to_json(const RunConfig& config);

/// Canonical document without output-location settings, as embedded in
/// reports and hashed.
nlohmann::json canonical_json(const RunConfig& config);

/// FNV-1a 64 over the canonical document, hex encoded.
std::string config_hash(const RunConfig& config);

/// Re-derives the topology's link and compute specs from the `compute`
/// and `network` tables (called after editing those tables in code).
void apply_class_tables(RunConfig& config);

}  // namespace fogbench
