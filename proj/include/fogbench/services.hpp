// Reference implementations of the scenario services as message handlers:
// gateway aggregation/quorum detection, windowed inference at the
// on-premise node, and local warnings.

#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <vector>

#include "fogbench/node_queue.hpp"
#include "fogbench/records.hpp"

namespace fogbench {

class RoutingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct CollectionTrigger {
    std::uint64_t trigger_id = 0;
    int site_id = 0;
    std::int64_t tick = 0;
    SimTime trigger_time = 0;
    std::int64_t exceed_count = 0;
};

struct ForwardAction {
    bool forwarded = false;
    SimTime ready_time = 0;  // when the record leaves the gateway
};

/// Per-site edge service state.
class GatewayState {
public:
    GatewayState(int site_id, std::int64_t n_sensors, double quorum_ratio);

    int site_id() const { return site_id_; }
    std::int64_t quorum_bound() const { return bound_; }

    /// Registers that `sensor_id` exceeded its threshold during `tick`.
    /// Duplicate notifications within a tick count once. Returns a trigger
    /// the first time the distinct count exceeds the quorum bound.
    std::optional<CollectionTrigger> on_exceed(int sensor_id, std::int64_t tick, SimTime now);

    /// Registers an arriving buffer dump. Returns the assembled report once
    /// dumps from all sensors of the site have arrived.
    std::optional<EventReport> on_dump(std::uint64_t trigger_id, std::int64_t readings,
                                       std::int64_t size_bits);

    std::int64_t triggers() const { return triggers_; }
    std::int64_t forwarded() const { return forwarded_; }
    std::int64_t dropped() const { return dropped_; }
    std::size_t pending_collections() const { return pending_.size(); }

private:
    friend ForwardAction edge_on_aggregate(GatewayState&, NodeQueue&, SimTime,
                                           const AggregateRecord&, double);

    int site_id_;
    std::int64_t n_sensors_;
    std::int64_t bound_;
    std::int64_t current_tick_ = -1;
    std::int64_t count_ = 0;
    bool fired_ = false;
    std::vector<std::int64_t> last_seen_;  // tick + 1 of the last counted notification
    std::uint64_t next_trigger_ = 0;
    std::int64_t triggers_ = 0;
    std::int64_t forwarded_ = 0;
    std::int64_t dropped_ = 0;
    std::map<std::uint64_t, EventReport> pending_;
};

/// Charges c_agg on the gateway queue and forwards the record upstream.
/// Throws RoutingError for records of another site; a full queue drops the
/// record and counts it.
ForwardAction edge_on_aggregate(GatewayState& gateway, NodeQueue& node, SimTime now,
                                const AggregateRecord& record, double c_agg);

// ---------------------------------------------------------------------------
// Inference

/// Fixed-point scale of window entries; keeps window sums exact.
inline constexpr double kWindowScale = 4294967296.0;

struct WindowEntry {
    SimTime gen_time = 0;
    std::int64_t channel0 = 0;  // channel-0 mean * kWindowScale
};

struct InferenceWindow {
    const std::deque<WindowEntry>& entries;  // sorted by gen_time
    std::int64_t channel0_sum = 0;

    double mean_channel0() const;
};

/// Hook for the per-record event model. Implementations must be pure
/// functions of the window.
class InferenceModel {
public:
    virtual ~InferenceModel() = default;
    virtual double predict(const InferenceWindow& window) const = 0;
};

/// logistic(a * mean z-score of channel 0 + b), a = 2, b = -4.
class LogisticSurrogate final : public InferenceModel {
public:
    static constexpr double kSlope = 2.0;
    static constexpr double kIntercept = -4.0;
    double predict(const InferenceWindow& window) const override;
};

double logistic(double x);

/// Records of one site whose gen_time lies within t_LSTM of the newest.
class SlidingWindow {
public:
    explicit SlidingWindow(SimTime span) : span_(span) {}

    void insert(SimTime gen_time, double channel0_mean);
    InferenceWindow view() const;
    std::size_t size() const { return entries_.size(); }
    SimTime newest() const { return newest_; }
    SimTime oldest() const { return entries_.empty() ? 0 : entries_.front().gen_time; }

private:
    SimTime span_;
    SimTime newest_ = 0;
    std::deque<WindowEntry> entries_;
    std::int64_t sum_ = 0;
};

class InferenceService {
public:
    InferenceService(SimTime lstm_window, double warning_threshold,
                     std::shared_ptr<const InferenceModel> model = nullptr);

    /// Adds the record to its site window and annotates it. `inference_time`
    /// is when the annotation completes (>= arrival at the service).
    AnnotatedRecord infer_annotate(const AggregateRecord& record, SimTime inference_time);

    std::int64_t warnings() const { return warnings_; }
    const SlidingWindow* window(int site_id) const;

private:
    SimTime lstm_window_;
    double warning_threshold_;
    std::shared_ptr<const InferenceModel> model_;
    std::map<int, SlidingWindow> windows_;
    std::int64_t warnings_ = 0;
};

}  // namespace fogbench
