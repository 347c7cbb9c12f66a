#pragma once

#include <cstdint>
#include <optional>

namespace aqmsim {

// All simulation time is integer nanoseconds. Rates are bytes per second.
using TimeNs = std::int64_t;
using Bytes = std::uint64_t;
using RateBps = std::uint64_t; // bytes/s

inline constexpr TimeNs kNsPerSec = 1'000'000'000;

enum class Estimator : std::uint8_t {
    RawSojourn,
    ScaledExact,
    ScaledLgShift,
    ScaledClzShift,
    BacklogRate,
};

inline constexpr const char* estimator_name(Estimator e) {
    switch (e) {
    case Estimator::RawSojourn: return "raw_sojourn";
    case Estimator::ScaledExact: return "scaled_exact";
    case Estimator::ScaledLgShift: return "scaled_lg";
    case Estimator::ScaledClzShift: return "scaled_clz";
    case Estimator::BacklogRate: return "backlog_rate";
    }
    return "?";
}

// One queue-delay measurement, tagged with which estimator produced it.
struct DelaySample {
    Estimator estimator = Estimator::RawSojourn;
    TimeNs value = 0;
    TimeNs at = 0;
    std::uint64_t packet_id = 0;
};

enum class MarkAction : std::uint8_t { Pass, Mark, Drop };

inline constexpr const char* mark_action_name(MarkAction a) {
    switch (a) {
    case MarkAction::Pass: return "pass";
    case MarkAction::Mark: return "mark";
    case MarkAction::Drop: return "drop";
    }
    return "?";
}

enum class ApplicationPoint : std::uint8_t { Enqueue, Dequeue };

} // namespace aqmsim
