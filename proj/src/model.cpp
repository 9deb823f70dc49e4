#include "fogbench/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace fogbench {

namespace {

void require(bool ok, const std::string& field, const std::string& what) {
    if (!ok) throw InvalidParameter(field + ": " + what);
}

bool is_probability(double v) { return v >= 0.0 && v <= 1.0; }

}  // namespace

void validate(const WorkloadParams& p) {
    require(p.n_sensors >= 1, "workload.n_sensors", "must be >= 1");
    require(p.buffer_size >= 1, "workload.buffer_size", "must be >= 1");
    require(p.n_agg >= 1, "workload.n_agg", "must be >= 1");
    require(p.n_agg <= p.buffer_size, "workload.n_agg", "must not exceed buffer_size");
    require(p.quorum_ratio > 0.0 && p.quorum_ratio <= 1.0, "workload.quorum_ratio",
            "must be in (0, 1]");
    require(p.resolution_bits >= 1, "workload.resolution_bits", "must be >= 1");
    require(p.channels >= 1, "workload.channels", "must be >= 1");
    require(p.resolution_bits % p.channels == 0, "workload.resolution_bits",
            "must be divisible by channels");
    require(p.sampling_rate_hz > 0.0, "workload.sampling_rate_hz", "must be > 0");
    require(is_probability(p.exceed_prob), "workload.exceed_prob", "must be in [0, 1]");
    require(p.lstm_window_s > 0.0, "workload.lstm_window_s", "must be > 0");
    require(is_probability(p.q_recent), "workload.q_recent", "must be in [0, 1]");
    require(is_probability(p.q_random), "workload.q_random", "must be in [0, 1]");
    require(is_probability(p.q_scan), "workload.q_scan", "must be in [0, 1]");
    require(std::abs(p.q_recent + p.q_random + p.q_scan - 1.0) <= 1e-9, "workload.q_recent",
            "q_recent + q_random + q_scan must equal 1");
    require(p.n_clients >= 1, "workload.n_clients", "must be >= 1");
    require(p.request_rate_hz > 0.0, "workload.request_rate_hz", "must be > 0");
    require(p.stale_threshold_s > 0.0, "workload.stale_threshold_s", "must be > 0");
    require(p.n_cloud >= 1, "workload.n_cloud", "must be >= 1");
    require(is_probability(p.scan_threshold), "workload.scan_threshold", "must be in [0, 1]");
    require(p.scan_lookback_s >= 0.0, "workload.scan_lookback_s", "must be >= 0");
}

std::string_view to_string(ComponentClass c) {
    switch (c) {
        case ComponentClass::sensor: return "sensor";
        case ComponentClass::gateway: return "gateway";
        case ComponentClass::onprem: return "onprem";
        case ComponentClass::cloud: return "cloud";
    }
    return "?";
}

ComponentClass component_class_from_string(std::string_view s) {
    if (s == "sensor") return ComponentClass::sensor;
    if (s == "gateway") return ComponentClass::gateway;
    if (s == "onprem") return ComponentClass::onprem;
    if (s == "cloud") return ComponentClass::cloud;
    throw InvalidParameter("component_class: unknown value '" + std::string(s) + "'");
}

void validate(const ComputeSpec& s) {
    const std::string prefix = "compute." + std::string(to_string(s.component_class));
    require(s.cpu_cores > 0.0, prefix + ".cpu_cores", "must be > 0");
    require(s.mem_bytes > 0.0, prefix + ".mem_bytes", "must be > 0");
    require(s.disk_bytes > 0.0, prefix + ".disk_bytes", "must be > 0");
    require(s.resource_scale > 0.0, prefix + ".resource_scale", "must be > 0");
}

ComputeSpec default_compute(ComponentClass c) {
    constexpr double MB = 1e6;
    constexpr double GB = 1e9;
    constexpr double TB = 1e12;
    switch (c) {
        case ComponentClass::sensor: return {c, 0.25, 256 * MB, 4 * GB, 1.0};
        case ComponentClass::gateway: return {c, 4.0, 4 * GB, 256 * GB, 1.0};
        case ComponentClass::onprem: return {c, 32.0, 48 * GB, 2 * TB, 1.0};
        case ComponentClass::cloud: return {c, 48.0, 96 * GB, 4 * TB, 1.0};
    }
    return {};
}

std::string_view to_string(LinkType t) {
    switch (t) {
        case LinkType::lorawan: return "lorawan";
        case LinkType::lte_m: return "lte_m";
        case LinkType::fiber_1g: return "fiber_1g";
        case LinkType::fiber_10g: return "fiber_10g";
    }
    return "?";
}

LinkType link_type_from_string(std::string_view s) {
    if (s == "lorawan") return LinkType::lorawan;
    if (s == "lte_m") return LinkType::lte_m;
    if (s == "fiber_1g") return LinkType::fiber_1g;
    if (s == "fiber_10g") return LinkType::fiber_10g;
    throw InvalidParameter("link_type: unknown value '" + std::string(s) + "'");
}

void validate(const LinkSpec& s) {
    const std::string prefix = "network." + std::string(to_string(s.link_type));
    require(s.delay_per_km_ms >= 0.0, prefix + ".delay_per_km_ms", "must be >= 0");
    require(s.jitter_frac >= 0.0 && s.jitter_frac < 1.0 / 3.0, prefix + ".jitter_frac",
            "must be in [0, 1/3)");
    require(s.bandwidth_bps > 0.0, prefix + ".bandwidth_bps", "must be > 0");
    require(is_probability(s.loss_rate), prefix + ".loss_rate", "must be in [0, 1]");
    require(is_probability(s.corrupt_rate), prefix + ".corrupt_rate", "must be in [0, 1]");
    require(s.loss_rate + s.corrupt_rate < 1.0, prefix + ".loss_rate",
            "loss_rate + corrupt_rate must be < 1");
    require(is_probability(s.reorder_rate), prefix + ".reorder_rate", "must be in [0, 1]");
    require(is_probability(s.dup_rate), prefix + ".dup_rate", "must be in [0, 1]");
}

LinkSpec default_link(LinkType t) {
    switch (t) {
        case LinkType::lorawan: return {t, 0.021, 0.10, 22e3, 0.05, 0.05, 0.05, 0.05};
        case LinkType::lte_m: return {t, 0.017, 0.10, 1e6, 0.01, 0.01, 0.01, 0.01};
        case LinkType::fiber_1g: return {t, 0.0085, 0.10, 1e9, 0.001, 0.001, 0.001, 0.001};
        case LinkType::fiber_10g: return {t, 0.0085, 0.10, 1e9, 0.001, 0.001, 0.001, 0.001};
    }
    return {};
}

const Site& Topology::site(int site_id) const {
    for (const auto& s : sites) {
        if (s.site_id == site_id) return s;
    }
    throw InvalidParameter("topology: unknown site_id " + std::to_string(site_id));
}

bool Topology::has_site(int site_id) const {
    return std::any_of(sites.begin(), sites.end(),
                       [&](const Site& s) { return s.site_id == site_id; });
}

void validate(const Topology& topo, std::int64_t n_cloud) {
    require(!topo.sites.empty(), "topology.sites", "must not be empty");
    for (std::size_t i = 0; i < topo.sites.size(); ++i) {
        const Site& s = topo.sites[i];
        const std::string prefix = "topology.sites[" + std::to_string(i) + "]";
        for (std::size_t j = 0; j < i; ++j) {
            require(topo.sites[j].site_id != s.site_id, prefix + ".site_id", "duplicate id");
        }
        require(s.site_id >= 0, prefix + ".site_id", "must be >= 0");
        require(s.uplink_distance_km >= 0.0, prefix + ".uplink_distance_km", "must be >= 0");
        require(s.sensor_distance_km >= 0.0, prefix + ".sensor_distance_km", "must be >= 0");
        validate(s.gateway_compute);
        validate(s.sensor_compute);
        validate(s.uplink);
        validate(s.sensor_link);
    }
    validate(topo.onprem);
    require(static_cast<std::int64_t>(topo.cloud.size()) == n_cloud, "topology.cloud",
            "must hold n_cloud entries");
    for (const auto& c : topo.cloud) validate(c);
    validate(topo.onprem_cloud_link);
    require(topo.onprem_cloud_distance_km >= 0.0, "topology.onprem_cloud_distance_km",
            "must be >= 0");
}

double great_circle_km(GeoPoint a, GeoPoint b) {
    constexpr double earth_radius_km = 6371.0;
    constexpr double rad = std::numbers::pi / 180.0;
    const double dlat = (b.lat_deg - a.lat_deg) * rad;
    const double dlon = (b.lon_deg - a.lon_deg) * rad;
    const double h = std::sin(dlat / 2) * std::sin(dlat / 2) +
                     std::cos(a.lat_deg * rad) * std::cos(b.lat_deg * rad) *
                         std::sin(dlon / 2) * std::sin(dlon / 2);
    return 2.0 * earth_radius_km * std::asin(std::min(1.0, std::sqrt(h)));
}

const std::vector<NamedLocation>& volcano_sites() {
    static const std::vector<NamedLocation> sites = {
        {"kilauea", {19.421, -155.287}},
        {"mauna_loa", {19.475, -155.608}},
        {"hualalai", {19.692, -155.870}},
        {"mauna_kea", {19.821, -155.468}},
        {"haleakala", {20.709, -156.253}},
        {"kamaehuakanaloa", {18.920, -155.270}},
    };
    return sites;
}

GeoPoint hilo_location() { return {19.7297, -155.0900}; }

// USGS campus, Menlo Park CA.
GeoPoint cloud_location() { return {37.4530, -122.1817}; }

Topology default_topology(std::int64_t n_cloud) {
    Topology topo;
    // Sites near inhabited areas reach Hilo over fiber, remote ones over LTE-M.
    const LinkType uplinks[] = {LinkType::fiber_1g, LinkType::lte_m,    LinkType::fiber_1g,
                                LinkType::fiber_1g, LinkType::lte_m,    LinkType::lte_m};
    const auto& locations = volcano_sites();
    for (std::size_t i = 0; i < locations.size(); ++i) {
        Site s;
        s.site_id = static_cast<int>(i);
        s.name = std::string(locations[i].name);
        s.gateway_compute = default_compute(ComponentClass::gateway);
        s.sensor_compute = default_compute(ComponentClass::sensor);
        s.uplink = default_link(uplinks[i]);
        s.uplink_distance_km = great_circle_km(locations[i].where, hilo_location());
        s.sensor_link = default_link(LinkType::lorawan);
        s.sensor_distance_km = 2.0;
        topo.sites.push_back(std::move(s));
    }
    topo.onprem = default_compute(ComponentClass::onprem);
    topo.cloud.assign(static_cast<std::size_t>(n_cloud), default_compute(ComponentClass::cloud));
    topo.onprem_cloud_link = default_link(LinkType::fiber_10g);
    topo.onprem_cloud_distance_km = great_circle_km(hilo_location(), cloud_location());
    return topo;
}

double sensor_raw_rate(const WorkloadParams& params) {
    return static_cast<double>(params.resolution_bits) * params.sampling_rate_hz;
}

std::int64_t quorum_bound(std::int64_t n, double y) {
    const double v = static_cast<double>(n) * y;
    const double nearest = std::round(v);
    if (std::abs(v - nearest) <= 1e-9 * std::max(1.0, std::abs(v))) {
        return static_cast<std::int64_t>(nearest);
    }
    return static_cast<std::int64_t>(std::ceil(v));
}

double quorum_probability(std::int64_t n, double y, double p) {
    if (n < 1) throw InvalidParameter("quorum_probability: n must be >= 1");
    if (!(y > 0.0 && y <= 1.0)) throw InvalidParameter("quorum_probability: y must be in (0, 1]");
    if (!is_probability(p)) throw InvalidParameter("quorum_probability: p must be in [0, 1]");

    const std::int64_t bound = quorum_bound(n, y);
    if (bound >= n) return 0.0;
    if (p == 0.0) return 0.0;
    if (p == 1.0) return 1.0;

    // Tail sum P[X >= bound+1] as log-sum-exp over log pmf terms.
    const double log_p = std::log(p);
    const double log_q = std::log1p(-p);
    const double lg_n1 = std::lgamma(static_cast<double>(n) + 1.0);
    std::vector<double> terms;
    terms.reserve(static_cast<std::size_t>(n - bound));
    double peak = -std::numeric_limits<double>::infinity();
    for (std::int64_t k = bound + 1; k <= n; ++k) {
        const double kd = static_cast<double>(k);
        const double t = lg_n1 - std::lgamma(kd + 1.0) -
                         std::lgamma(static_cast<double>(n - k) + 1.0) + kd * log_p +
                         static_cast<double>(n - k) * log_q;
        terms.push_back(t);
        peak = std::max(peak, t);
    }
    double sum = 0.0;
    for (double t : terms) sum += std::exp(t - peak);
    return std::min(1.0, std::exp(peak) * sum);
}

double mean_sensor_gateway_bandwidth(const WorkloadParams& params) {
    const double r = static_cast<double>(params.resolution_bits);
    const double f = params.sampling_rate_hz;
    const double aggregate_term = r * f / static_cast<double>(params.n_agg);
    const double q = quorum_probability(params.n_sensors, params.quorum_ratio, params.exceed_prob);
    return aggregate_term + q * r * static_cast<double>(params.buffer_size) * f;
}

double edge_ingress_rate(const WorkloadParams& params) {
    return static_cast<double>(params.n_sensors) * mean_sensor_gateway_bandwidth(params);
}

RateSummary derived_rates(const WorkloadParams& params, std::size_t n_sites) {
    RateSummary s{};
    s.raw_rate_bps = sensor_raw_rate(params);
    s.quorum_probability =
        quorum_probability(params.n_sensors, params.quorum_ratio, params.exceed_prob);
    s.trigger_rate_per_site_hz = s.quorum_probability * params.sampling_rate_hz;
    s.mean_sensor_gateway_bps = mean_sensor_gateway_bandwidth(params);
    s.edge_ingress_bps = edge_ingress_rate(params);
    s.aggregate_rate_per_sensor_hz = params.sampling_rate_hz / static_cast<double>(params.n_agg);
    s.aggregate_rate_per_site_hz =
        s.aggregate_rate_per_sensor_hz * static_cast<double>(params.n_sensors);
    s.total_insert_rate_hz = s.aggregate_rate_per_site_hz * static_cast<double>(n_sites);
    s.query_rate_hz = static_cast<double>(params.n_clients) * params.request_rate_hz;
    s.recent_rate_hz = s.query_rate_hz * params.q_recent;
    s.random_rate_hz = s.query_rate_hz * params.q_random;
    s.scan_rate_hz = s.query_rate_hz * params.q_scan;
    return s;
}

}  // namespace fogbench
