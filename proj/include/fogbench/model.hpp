// Workload, compute and network parameters of the volcano-monitoring fog
// scenario, plus the closed-form rate model used to validate simulations.

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace fogbench {

/// Raised when a parameter violates its documented domain. The message
/// always names the offending field.
class InvalidParameter : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct WorkloadParams {
    std::int64_t n_sensors = 300;        // N_s, per site
    std::int64_t buffer_size = 1000;     // S_b, readings
    std::int64_t n_agg = 25;             // readings per aggregate
    double quorum_ratio = 0.20;          // y
    std::int64_t resolution_bits = 192;  // r, total over all channels
    std::int64_t channels = 3;
    double sampling_rate_hz = 100.0;     // f
    double exceed_prob = 0.15;           // p
    double lstm_window_s = 10.0;         // t_LSTM
    double q_recent = 0.50;
    double q_random = 0.30;
    double q_scan = 0.20;
    std::int64_t n_clients = 100;
    double request_rate_hz = 1.0;        // per client
    double stale_threshold_s = 5.0;      // t_stale
    std::int64_t n_cloud = 3;
    double scan_threshold = 0.9;         // theta of scan_filter queries
    double scan_lookback_s = 0.0;        // 0 = entire retained history
};

/// Throws InvalidParameter naming the first violated field.
void validate(const WorkloadParams& params);

enum class ComponentClass { sensor, gateway, onprem, cloud };

std::string_view to_string(ComponentClass c);
ComponentClass component_class_from_string(std::string_view s);

struct ComputeSpec {
    ComponentClass component_class = ComponentClass::gateway;
    double cpu_cores = 1.0;
    double mem_bytes = 1e9;
    double disk_bytes = 1e9;
    double resource_scale = 1.0;

    double effective_cores() const { return cpu_cores * resource_scale; }
    double effective_mem_bytes() const { return mem_bytes * resource_scale; }
    double effective_disk_bytes() const { return disk_bytes * resource_scale; }
};

void validate(const ComputeSpec& spec);

/// Reference capacities for one component class.
ComputeSpec default_compute(ComponentClass c);

enum class LinkType { lorawan, lte_m, fiber_1g, fiber_10g };

std::string_view to_string(LinkType t);
LinkType link_type_from_string(std::string_view s);

struct LinkSpec {
    LinkType link_type = LinkType::fiber_1g;
    double delay_per_km_ms = 0.0;
    double jitter_frac = 0.10;
    double bandwidth_bps = 1e9;
    double loss_rate = 0.0;
    double corrupt_rate = 0.0;
    double reorder_rate = 0.0;
    double dup_rate = 0.0;
};

void validate(const LinkSpec& spec);

/// Reference parameters for one link type. Fiber 10G defaults to 1 Gbps
/// bandwidth; override bandwidth_bps to change it.
LinkSpec default_link(LinkType t);

struct Site {
    int site_id = 0;
    std::string name;
    ComputeSpec gateway_compute;
    LinkSpec uplink;
    double uplink_distance_km = 0.0;
    LinkSpec sensor_link;
    double sensor_distance_km = 0.0;
    ComputeSpec sensor_compute;
};

struct Topology {
    std::vector<Site> sites;
    ComputeSpec onprem;
    std::vector<ComputeSpec> cloud;
    LinkSpec onprem_cloud_link;
    double onprem_cloud_distance_km = 0.0;

    const Site& site(int site_id) const;
    bool has_site(int site_id) const;
};

/// Checks structural invariants; n_cloud must match the cloud list.
void validate(const Topology& topo, std::int64_t n_cloud);

struct GeoPoint {
    double lat_deg;
    double lon_deg;
};

/// Haversine distance on a sphere of radius 6371 km.
double great_circle_km(GeoPoint a, GeoPoint b);

/// Published coordinates of the six monitored volcanoes, the Hilo
/// observatory and the cloud region used for default distances.
struct NamedLocation {
    std::string_view name;
    GeoPoint where;
};
const std::vector<NamedLocation>& volcano_sites();
GeoPoint hilo_location();
GeoPoint cloud_location();

/// Six sites with distances derived from the coordinates above.
Topology default_topology(std::int64_t n_cloud = 3);

// ---------------------------------------------------------------------------
// Analytical rate model.

/// r * f, bits per second produced by one sensor.
double sensor_raw_rate(const WorkloadParams& params);

/// Smallest exceed count that is *not* enough for quorum, i.e. ceil(n*y).
/// Products within 1e-9 of an integer are snapped to it so that 300*0.2
/// yields 60 rather than 61.
std::int64_t quorum_bound(std::int64_t n, double y);

/// P[X > ceil(n*y)] for X ~ Binomial(n, p), evaluated in log space.
double quorum_probability(std::int64_t n, double y, double p);

/// Mean bits/s between one sensor and its gateway: aggregate stream plus
/// full-buffer dumps triggered by site quorum events.
double mean_sensor_gateway_bandwidth(const WorkloadParams& params);

/// N_s times the per-sensor mean bandwidth.
double edge_ingress_rate(const WorkloadParams& params);

struct RateSummary {
    double raw_rate_bps;
    double quorum_probability;
    double trigger_rate_per_site_hz;
    double mean_sensor_gateway_bps;
    double edge_ingress_bps;
    double aggregate_rate_per_sensor_hz;
    double aggregate_rate_per_site_hz;
    double total_insert_rate_hz;
    double query_rate_hz;
    double recent_rate_hz;
    double random_rate_hz;
    double scan_rate_hz;
};

RateSummary derived_rates(const WorkloadParams& params, std::size_t n_sites = 6);

}  // namespace fogbench
