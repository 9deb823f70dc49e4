#include "fogbench/services.hpp"

#include <algorithm>
#include <cmath>

#include "fogbench/model.hpp"

namespace fogbench {

GatewayState::GatewayState(int site_id, std::int64_t n_sensors, double quorum_ratio)
    : site_id_(site_id),
      n_sensors_(n_sensors),
      bound_(fogbench::quorum_bound(n_sensors, quorum_ratio)),
      last_seen_(static_cast<std::size_t>(n_sensors), 0) {}

std::optional<CollectionTrigger> GatewayState::on_exceed(int sensor_id, std::int64_t tick,
                                                         SimTime now) {
    if (sensor_id < 0 || sensor_id >= n_sensors_) {
        throw RoutingError("gateway " + std::to_string(site_id_) + ": unknown sensor " +
                           std::to_string(sensor_id));
    }
    if (tick != current_tick_) {
        current_tick_ = tick;
        count_ = 0;
        fired_ = false;
    }
    auto& seen = last_seen_[static_cast<std::size_t>(sensor_id)];
    if (seen == tick + 1) return std::nullopt;
    seen = tick + 1;
    ++count_;
    if (fired_ || count_ <= bound_) return std::nullopt;

    fired_ = true;
    ++triggers_;
    CollectionTrigger t;
    t.trigger_id = next_trigger_++;
    t.site_id = site_id_;
    t.tick = tick;
    t.trigger_time = now;
    t.exceed_count = count_;
    EventReport report;
    report.report_id = t.trigger_id;
    report.site_id = site_id_;
    report.trigger_time = now;
    report.exceed_count = count_;
    pending_.emplace(t.trigger_id, report);
    return t;
}

std::optional<EventReport> GatewayState::on_dump(std::uint64_t trigger_id, std::int64_t readings,
                                                 std::int64_t size_bits) {
    auto it = pending_.find(trigger_id);
    if (it == pending_.end()) {
        throw RoutingError("gateway " + std::to_string(site_id_) + ": dump for unknown trigger " +
                           std::to_string(trigger_id));
    }
    EventReport& r = it->second;
    ++r.dumps;
    r.readings += readings;
    r.size_bits += size_bits;
    if (r.dumps < n_sensors_) return std::nullopt;
    EventReport done = r;
    pending_.erase(it);
    return done;
}

ForwardAction edge_on_aggregate(GatewayState& gateway, NodeQueue& node, SimTime now,
                                const AggregateRecord& record, double c_agg) {
    if (record.site_id != gateway.site_id_) {
        throw RoutingError("gateway " + std::to_string(gateway.site_id_) +
                           ": record from site " + std::to_string(record.site_id));
    }
    const auto done = node.execute(now, c_agg);
    if (!done) {
        ++gateway.dropped_;
        return {};
    }
    ++gateway.forwarded_;
    return {true, *done};
}

double InferenceWindow::mean_channel0() const {
    if (entries.empty()) return 0.0;
    return static_cast<double>(channel0_sum) / kWindowScale / static_cast<double>(entries.size());
}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double LogisticSurrogate::predict(const InferenceWindow& window) const {
    return logistic(kSlope * window.mean_channel0() + kIntercept);
}

void SlidingWindow::insert(SimTime gen_time, double channel0_mean) {
    const WindowEntry e{gen_time, static_cast<std::int64_t>(std::llround(channel0_mean * kWindowScale))};
    if (entries_.empty() || entries_.back().gen_time <= gen_time) {
        entries_.push_back(e);
    } else {
        auto pos = std::upper_bound(entries_.begin(), entries_.end(), gen_time,
                                    [](SimTime t, const WindowEntry& w) { return t < w.gen_time; });
        entries_.insert(pos, e);
    }
    sum_ += e.channel0;
    newest_ = std::max(newest_, gen_time);
    while (!entries_.empty() && entries_.front().gen_time <= newest_ - span_) {
        sum_ -= entries_.front().channel0;
        entries_.pop_front();
    }
}

InferenceWindow SlidingWindow::view() const { return InferenceWindow{entries_, sum_}; }

InferenceService::InferenceService(SimTime lstm_window, double warning_threshold,
                                   std::shared_ptr<const InferenceModel> model)
    : lstm_window_(lstm_window),
      warning_threshold_(warning_threshold),
      model_(model ? std::move(model) : std::make_shared<LogisticSurrogate>()) {}

AnnotatedRecord InferenceService::infer_annotate(const AggregateRecord& record,
                                                 SimTime inference_time) {
    auto [it, _] = windows_.try_emplace(record.site_id, lstm_window_);
    SlidingWindow& w = it->second;
    w.insert(record.gen_time, record.channel_means[0]);

    double probability;
    if (w.size() == 0) {
        // The record itself fell outside the window; score it alone.
        SlidingWindow single(lstm_window_);
        single.insert(record.gen_time, record.channel_means[0]);
        probability = model_->predict(single.view());
    } else {
        probability = model_->predict(w.view());
    }
    probability = std::clamp(probability, 0.0, 1.0);
    if (probability > warning_threshold_) ++warnings_;
    return AnnotatedRecord{record, probability, inference_time};
}

const SlidingWindow* InferenceService::window(int site_id) const {
    auto it = windows_.find(site_id);
    return it == windows_.end() ? nullptr : &it->second;
}

}  // namespace fogbench
