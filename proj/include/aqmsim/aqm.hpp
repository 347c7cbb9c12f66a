#pragma once

#include <cstdint>

#include "aqmsim/rng.hpp"
#include "aqmsim/types.hpp"

namespace aqmsim {

enum class Signal : std::uint8_t { EcnMark, Drop };

// Outcome of running an AQM against one packet.
struct MarkDecision {
    MarkAction action = MarkAction::Pass;
    double p_at_decision = 0.0;
    ApplicationPoint applied_at = ApplicationPoint::Dequeue;
};

// --- proportional-integral controller -----------------------------------

// PI controller over a queue-delay signal. Gains are per second of delay
// error; the probability is clamped to [0, 1] after every update.
struct PiState {
    double p = 0.0;
    TimeNs last_qdelay = 0;
    TimeNs target = 15'000'000;    // 15 ms
    double alpha = 0.125;          // 1/s
    double beta = 1.25;            // 1/s
    TimeNs t_update = 16'000'000;  // 16 ms
    bool burst_heuristic = false;  // suppress signals once delay < target/2
    bool seen_sample = false;
};

// One controller step: p += alpha*(qdelay - target) + beta*(qdelay -
// last_qdelay), errors in seconds. Call when now >= last update + t_update.
void pi_update(PiState& s, TimeNs qdelay);

// Whether the heuristic currently suppresses signalling: enabled, and the
// most recent delay sample sits below half the target.
bool pi_suppressed(const PiState& s, TimeNs last_sample);

// --- CoDel ---------------------------------------------------------------

struct CodelState {
    TimeNs target = 5'000'000;     // 5 ms
    TimeNs interval = 100'000'000; // 100 ms
    TimeNs first_above_time = 0;
    TimeNs drop_next = 0;
    std::uint32_t count = 0;
    std::uint32_t lastcount = 0;
    bool dropping = false;
};

// Standard CoDel step, driven by one delay sample per dequeue. Returns the
// action for the departing packet (Mark or Drop per the configured signal).
MarkDecision codel_on_dequeue(CodelState& s, TimeNs qdelay, TimeNs now, Signal signal);

// interval / sqrt(count), computed in integer nanoseconds.
TimeNs codel_control_law(TimeNs t, TimeNs interval, std::uint32_t count);

// --- ramp / step profile -------------------------------------------------

// Linear probability ramp between two delay thresholds. min_th == max_th
// degenerates to a step: below => 0, at or above => max_p.
struct RampState {
    TimeNs min_th = 5'000'000;
    TimeNs max_th = 15'000'000;
    double max_p = 0.1;
};

double ramp_prob(const RampState& s, TimeNs qdelay);

// --- marker --------------------------------------------------------------

enum class MarkerMode : std::uint8_t { RandomBernoulli, DeterministicInterval };

// Converts a probability into discrete signal events. The deterministic
// mode carries a fractional accumulator in [0, 1): each decision adds p and
// fires when the accumulator reaches one, so a constant p yields exactly
// 1/p spacing instead of a Bernoulli draw's variance.
struct Marker {
    MarkerMode mode = MarkerMode::RandomBernoulli;
    double accumulator = 0.0;
};

// The generator is only drawn from in random mode and only when p > 0, so
// a p=0 stream leaves the RNG untouched.
MarkAction marker_decide(Marker& m, double p, Signal signal, Rng& rng);

} // namespace aqmsim
