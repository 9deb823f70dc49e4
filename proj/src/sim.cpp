#include "fogbench/sim.hpp"

#include <algorithm>

namespace fogbench {

const char* to_string(EventKind kind) {
    switch (kind) {
        case EventKind::message_arrival: return "message_arrival";
        case EventKind::service_completion: return "service_completion";
        case EventKind::timer: return "timer";
        case EventKind::generator_tick: return "generator_tick";
    }
    return "?";
}

std::uint64_t Simulator::schedule(SimTime fire_time, EventKind kind, int node,
                                  std::function<void()> action, const char* detail) {
    if (fire_time < now_) {
        throw std::logic_error("schedule: fire_time " + std::to_string(fire_time) +
                               " is before now " + std::to_string(now_));
    }
    const std::uint64_t seq = next_seq_++;
    heap_.push_back(Event{fire_time, seq, kind, node, std::move(action), detail});
    std::push_heap(heap_.begin(), heap_.end(), later);
    return seq;
}

EventStats Simulator::run_until(SimTime t_end) {
    if (t_end < now_) throw std::logic_error("run_until: t_end is before now");
    EventStats stats;
    while (!heap_.empty() && heap_.front().fire_time <= t_end) {
        std::pop_heap(heap_.begin(), heap_.end(), later);
        Event ev = std::move(heap_.back());
        heap_.pop_back();
        now_ = ev.fire_time;
        if (trace_ != nullptr) {
            *trace_ << ev.fire_time << ',' << to_string(ev.kind) << ',' << ev.node << ','
                    << ev.detail << '\n';
        }
        ++stats.processed;
        ++stats.by_kind[static_cast<std::size_t>(ev.kind)];
        if (ev.action) ev.action();
    }
    now_ = t_end;
    return stats;
}

}  // namespace fogbench
