// FIFO compute queue of one node. Work is expressed in core-seconds and
// served at cpu_cores * resource_scale. Queue length (waiting plus in
// service) is bounded by effective memory / record footprint; work that
// arrives at a full queue is dropped and counted.

#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <string>

#include "fogbench/model.hpp"
#include "fogbench/time.hpp"

namespace fogbench {

struct QueueIntegrals {
    double length_area = 0.0;  // integral of queue length, item * ns
    double busy_ns = 0.0;      // time with at least one item present
};

class NodeQueue {
public:
    NodeQueue(std::string name, const ComputeSpec& spec, double record_footprint_bytes = 1024.0);

    /// Enqueues `work_cost` core-seconds at `now`. Returns the completion
    /// time, or nullopt if the queue was full and the work was dropped.
    std::optional<SimTime> execute(SimTime now, double work_cost);

    /// Integrates queue length and busy time up to `t` (t must not go back).
    void advance(SimTime t);

    QueueIntegrals integrals() const { return integrals_; }
    SimTime advanced_to() const { return last_t_; }

    /// Items present as of the last advance/execute.
    std::size_t length() const { return completions_.size(); }
    std::size_t max_length() const { return max_length_; }
    std::size_t peak_length() const { return peak_length_; }
    std::int64_t drops() const { return drops_; }
    std::int64_t executed() const { return executed_; }
    double capacity() const { return capacity_; }
    SimTime busy_until() const { return busy_until_; }
    const std::string& name() const { return name_; }

private:
    std::string name_;
    double capacity_;
    std::size_t max_length_;
    std::deque<SimTime> completions_;
    SimTime busy_until_ = 0;
    SimTime last_t_ = 0;
    QueueIntegrals integrals_;
    std::size_t peak_length_ = 0;
    std::int64_t drops_ = 0;
    std::int64_t executed_ = 0;
};

}  // namespace fogbench
