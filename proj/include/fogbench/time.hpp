#pragma once

#include <cmath>
#include <cstdint>

namespace fogbench {

/// Simulated nanoseconds since run start.
using SimTime = std::int64_t;

inline constexpr SimTime kNanosPerSecond = 1'000'000'000;

inline SimTime seconds_to_ns(double s) {
    return static_cast<SimTime>(std::llround(s * static_cast<double>(kNanosPerSecond)));
}

inline double ns_to_seconds(SimTime t) {
    return static_cast<double>(t) / static_cast<double>(kNanosPerSecond);
}

inline SimTime ms_to_ns(double ms) { return static_cast<SimTime>(std::llround(ms * 1e6)); }

}  // namespace fogbench
