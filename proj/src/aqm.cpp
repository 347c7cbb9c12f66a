#include "aqmsim/aqm.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

namespace aqmsim {

void pi_update(PiState& s, TimeNs qdelay) {
    const double err = static_cast<double>(qdelay - s.target) / 1e9;
    const double delta = static_cast<double>(qdelay - s.last_qdelay) / 1e9;
    s.p = std::clamp(s.p + s.alpha * err + s.beta * delta, 0.0, 1.0);
    s.last_qdelay = qdelay;
    s.seen_sample = true;
}

bool pi_suppressed(const PiState& s, TimeNs last_sample) {
    return s.burst_heuristic && s.seen_sample && last_sample < s.target / 2;
}

TimeNs codel_control_law(TimeNs t, TimeNs interval, std::uint32_t count) {
    if (count == 0) count = 1;
    const double step = static_cast<double>(interval) / std::sqrt(static_cast<double>(count));
    return t + static_cast<TimeNs>(step);
}

static MarkDecision codel_fire(Signal signal) {
    MarkDecision d;
    d.action = signal == Signal::Drop ? MarkAction::Drop : MarkAction::Mark;
    d.p_at_decision = 1.0;
    return d;
}

MarkDecision codel_on_dequeue(CodelState& s, TimeNs qdelay, TimeNs now, Signal signal) {
    MarkDecision d;

    bool ok_to_signal = false;
    if (qdelay < s.target) {
        s.first_above_time = 0;
    } else if (s.first_above_time == 0) {
        s.first_above_time = now + s.interval;
    } else if (now >= s.first_above_time) {
        ok_to_signal = true;
    }

    if (s.dropping) {
        if (!ok_to_signal) {
            s.dropping = false;
        } else if (now >= s.drop_next) {
            ++s.count;
            s.drop_next = codel_control_law(s.drop_next, s.interval, s.count);
            return codel_fire(signal);
        }
    } else if (ok_to_signal) {
        s.dropping = true;
        // Re-entering soon after the last episode resumes at a higher count
        // instead of restarting the search from one.
        if (s.count > 2 && now - s.drop_next < 16 * s.interval) {
            s.count = s.count - 2;
        } else {
            s.count = 1;
        }
        s.lastcount = s.count;
        s.drop_next = codel_control_law(now, s.interval, s.count);
        return codel_fire(signal);
    }
    return d;
}

double ramp_prob(const RampState& s, TimeNs qdelay) {
    if (s.min_th >= s.max_th) {
        return qdelay >= s.min_th ? s.max_p : 0.0;
    }
    if (qdelay <= s.min_th) return 0.0;
    if (qdelay >= s.max_th) return s.max_p;
    const double span = static_cast<double>(s.max_th - s.min_th);
    return s.max_p * static_cast<double>(qdelay - s.min_th) / span;
}

MarkAction marker_decide(Marker& m, double p, Signal signal, Rng& rng) {
    assert(p >= 0.0 && p <= 1.0);
    const MarkAction fire = signal == Signal::Drop ? MarkAction::Drop : MarkAction::Mark;
    if (p <= 0.0) return MarkAction::Pass;
    if (m.mode == MarkerMode::DeterministicInterval) {
        m.accumulator += p;
        if (m.accumulator >= 1.0) {
            m.accumulator -= 1.0;
            return fire;
        }
        return MarkAction::Pass;
    }
    return rng.uniform() < p ? fire : MarkAction::Pass;
}

} // namespace aqmsim
