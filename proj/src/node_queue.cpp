#include "fogbench/node_queue.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fogbench {

NodeQueue::NodeQueue(std::string name, const ComputeSpec& spec, double record_footprint_bytes)
    : name_(std::move(name)), capacity_(spec.effective_cores()) {
    validate(spec);
    if (record_footprint_bytes <= 0.0) {
        throw InvalidParameter("run.record_footprint_bytes: must be > 0");
    }
    const double slots = std::floor(spec.effective_mem_bytes() / record_footprint_bytes);
    max_length_ = slots < 1.0 ? 1 : static_cast<std::size_t>(std::min(slots, 1e15));
}

void NodeQueue::advance(SimTime t) {
    if (t < last_t_) throw std::logic_error("NodeQueue::advance: time went backwards");
    while (!completions_.empty() && completions_.front() <= t) {
        const SimTime c = completions_.front();
        const double len = static_cast<double>(completions_.size());
        integrals_.length_area += len * static_cast<double>(c - last_t_);
        integrals_.busy_ns += static_cast<double>(c - last_t_);
        last_t_ = c;
        completions_.pop_front();
    }
    if (!completions_.empty()) {
        const double len = static_cast<double>(completions_.size());
        integrals_.length_area += len * static_cast<double>(t - last_t_);
        integrals_.busy_ns += static_cast<double>(t - last_t_);
    }
    last_t_ = t;
}

std::optional<SimTime> NodeQueue::execute(SimTime now, double work_cost) {
    if (work_cost < 0.0) throw std::invalid_argument("execute: work_cost must be >= 0");
    advance(now);
    if (work_cost == 0.0 && busy_until_ <= now) {
        ++executed_;
        return now;
    }
    if (completions_.size() >= max_length_) {
        ++drops_;
        return std::nullopt;
    }
    const SimTime start = std::max(now, busy_until_);
    const auto service = static_cast<SimTime>(std::llround(work_cost / capacity_ * 1e9));
    busy_until_ = start + service;
    completions_.push_back(busy_until_);
    peak_length_ = std::max(peak_length_, completions_.size());
    ++executed_;
    return busy_until_;
}

}  // namespace fogbench
