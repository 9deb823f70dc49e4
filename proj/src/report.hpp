// Shared by the simulated and wall-clock drivers: raw observations of one
// run and their reduction to the report document.

#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fogbench/runner.hpp"

namespace fogbench::detail {

struct Collected {
    SimTime duration = 0;
    SimTime warmup_end = 0;
    std::string binding;  // "in_process" or "external"
    std::vector<LatencySample> samples;
    std::vector<StalenessProbe> probes;
    std::vector<SimTime> omniscient;  // gen_time of every created aggregate
    RunCounters counters;
    QueueObservation edge_queue;
    double cloud_utilization = 0.0;
    double sensor_payload_bits = 0.0;  // post warm-up, all sensors
    std::int64_t total_sensors = 0;
    nlohmann::json sections = nlohmann::json::object();  // merged into the report
    std::vector<std::string> invariant_failures;
};

RunOutput finalize(const RunConfig& config, Collected&& c);

nlohmann::json summary_json(const LatencySummary& s);

}  // namespace fogbench::detail
