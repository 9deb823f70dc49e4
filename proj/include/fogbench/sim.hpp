// Single-threaded discrete-event core. Events fire in (fire_time, seq)
// order; seq is assigned at scheduling time and is unique per simulator.

#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fogbench/time.hpp"

namespace fogbench {

enum class EventKind : std::uint8_t { message_arrival, service_completion, timer, generator_tick };

const char* to_string(EventKind kind);

struct Event {
    SimTime fire_time = 0;
    std::uint64_t seq = 0;
    EventKind kind = EventKind::timer;
    int node = -1;
    std::function<void()> action;
    const char* detail = "";
};

struct EventStats {
    std::uint64_t processed = 0;
    std::array<std::uint64_t, 4> by_kind{};
};

class Simulator {
public:
    SimTime now() const { return now_; }

    /// Schedules `action` at `fire_time`. Scheduling into the past throws
    /// std::logic_error. Returns the event's sequence number.
    std::uint64_t schedule(SimTime fire_time, EventKind kind, int node,
                           std::function<void()> action, const char* detail = "");

    std::uint64_t schedule_in(SimTime delay, EventKind kind, int node,
                              std::function<void()> action, const char* detail = "") {
        return schedule(now_ + delay, kind, node, std::move(action), detail);
    }

    /// Processes every event with fire_time <= t_end, then sets now to t_end.
    EventStats run_until(SimTime t_end);

    std::size_t pending() const { return heap_.size(); }

    /// Newline-delimited `time_ns,kind,node,detail` records, one per fired event.
    void set_trace(std::ostream* out) { trace_ = out; }

private:
    static bool later(const Event& a, const Event& b) {
        if (a.fire_time != b.fire_time) return a.fire_time > b.fire_time;
        return a.seq > b.seq;
    }

    SimTime now_ = 0;
    std::uint64_t next_seq_ = 0;
    std::vector<Event> heap_;
    std::ostream* trace_ = nullptr;
};

}  // namespace fogbench
