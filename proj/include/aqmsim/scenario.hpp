#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>

#include "aqmsim/aqm.hpp"
#include "aqmsim/types.hpp"

namespace aqmsim {

// --- arrival processes ---------------------------------------------------

struct ArrivalConstant {
    RateBps rate = 0;
    bool operator==(const ArrivalConstant&) const = default;
};

// Periodic two-level source: the first duty*period of each period runs at
// rate_high, the rest at rate_low. duty may be 0 or 1.
struct ArrivalBurst {
    RateBps rate_high = 0;
    RateBps rate_low = 0;
    TimeNs period = 0;
    double duty = 0.5;
    bool operator==(const ArrivalBurst&) const = default;
};

struct ArrivalOnOff {
    RateBps rate = 0;
    TimeNs on_ns = 0;
    TimeNs off_ns = 0;
    bool operator==(const ArrivalOnOff&) const = default;
};

struct ArrivalPoisson {
    RateBps mean_rate = 0;
    std::uint64_t seed = 0; // 0 = follow the scenario seed
    bool operator==(const ArrivalPoisson&) const = default;
};

using ArrivalProcess = std::variant<ArrivalConstant, ArrivalBurst, ArrivalOnOff, ArrivalPoisson>;

// --- drain processes -----------------------------------------------------

struct DrainConstant {
    RateBps rate = 0;
    bool operator==(const DrainConstant&) const = default;
};

struct DrainStep {
    RateBps rate_before = 0;
    RateBps rate_after = 0;
    TimeNs t_step = 0;
    bool operator==(const DrainStep&) const = default;
};

// Constant rate interrupted by periodic stalls: no bytes move during
// [k*stall_period, k*stall_period + stall_len).
struct DrainFitsStarts {
    RateBps rate = 0;
    TimeNs stall_period = 0;
    TimeNs stall_len = 0;
    bool operator==(const DrainFitsStarts&) const = default;
};

// Rate takes a multiplicative random step of +-step_pct percent every
// step_period, clamped to [mean/4, mean*4].
struct DrainRandomWalk {
    RateBps mean_rate = 0;
    double step_pct = 10.0;
    TimeNs step_period = 10'000'000; // 10 ms
    std::uint64_t seed = 0;          // 0 = follow the scenario seed
    bool operator==(const DrainRandomWalk&) const = default;
};

using DrainProcess = std::variant<DrainConstant, DrainStep, DrainFitsStarts, DrainRandomWalk>;

// --- AQM configuration ---------------------------------------------------

enum class AqmAlgorithm : std::uint8_t { None, Pi, Codel, Ramp };

struct AqmConfig {
    AqmAlgorithm algorithm = AqmAlgorithm::None;
    ApplicationPoint point = ApplicationPoint::Dequeue;
    Signal signal = Signal::EcnMark;
    MarkerMode marker = MarkerMode::RandomBernoulli;
    // PI
    TimeNs pi_target = 15'000'000;
    double pi_alpha = 0.125;
    double pi_beta = 1.25;
    TimeNs pi_t_update = 16'000'000;
    bool pi_burst_heuristic = false;
    // CoDel
    TimeNs codel_target = 5'000'000;
    TimeNs codel_interval = 100'000'000;
    // Ramp
    TimeNs ramp_min_th = 5'000'000;
    TimeNs ramp_max_th = 15'000'000;
    double ramp_max_p = 0.1;
    bool operator==(const AqmConfig&) const = default;
};

// --- scenario ------------------------------------------------------------

struct Scenario {
    ArrivalProcess arrival = ArrivalConstant{};
    DrainProcess drain = DrainConstant{};
    Bytes packet_size = 1500;
    TimeNs duration = 0;
    std::optional<Bytes> queue_capacity; // absent = unbounded
    AqmConfig aqm;
    Estimator estimator = Estimator::ScaledExact;
    std::uint64_t seed = 1;
    std::uint32_t min_window_packets = 16; // drain-rate estimator window
    TimeNs report_threshold = 20'000'000;  // lag-matrix crossing threshold
    bool operator==(const Scenario&) const = default;
};

struct ConfigError {
    int line = 0; // 0 when the error is not tied to a line
    std::string key;
    std::string message;
};

// Parses the line-oriented key=value scenario text. Strict: unknown keys,
// missing units and malformed values are errors. On failure returns the
// first error encountered.
std::variant<Scenario, ConfigError> parse_scenario(const std::string& text);

// Applies one "key=value" override to an already-parsed scenario.
std::optional<ConfigError> apply_override(Scenario& sc, const std::string& pair);

// Renders a scenario back to text such that parse_scenario(render(sc)) == sc.
std::string render(const Scenario& sc);

// Unit-suffixed literal parsers, shared by the scenario parser and tests.
// Times need ns/us/ms/s, rates bit/s or B/s spellings (stored as bytes/s),
// sizes B/kB/MB. Empty optional = malformed.
std::optional<TimeNs> parse_time(const std::string& text);
std::optional<RateBps> parse_rate(const std::string& text);
std::optional<Bytes> parse_size(const std::string& text);

} // namespace aqmsim
