#include "aqmsim/sim.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

#include "aqmsim/aqm.hpp"
#include "aqmsim/estimators.hpp"
#include "aqmsim/queue_core.hpp"
#include "aqmsim/rng.hpp"

namespace aqmsim {
namespace {

using u128 = unsigned __int128;

// Substream ids for the per-scenario master seed.
constexpr std::uint64_t kStreamArrival = 1;
constexpr std::uint64_t kStreamDrain = 2;
constexpr std::uint64_t kStreamMarker = 3;

TimeNs lattice_offset(std::uint64_t k, Bytes packet_size, RateBps rate) {
    return static_cast<TimeNs>(u128(k) * packet_size * kNsPerSec / rate);
}

// Produces arrival timestamps in increasing order, all inside [0, duration).
// Each deterministic phase restarts its own lattice at the phase origin, so
// every active phase begins with an arrival at its first instant.
class ArrivalGen {
  public:
    explicit ArrivalGen(const Scenario& sc) : sc_(sc), size_(sc.packet_size) {
        if (const auto* p = std::get_if<ArrivalPoisson>(&sc.arrival)) {
            rng_.emplace(p->seed ? p->seed : sc.seed, kStreamArrival);
            mean_gap_ = static_cast<double>(size_) * 1e9 / static_cast<double>(p->mean_rate);
        } else {
            load_phase();
        }
    }

    std::optional<TimeNs> next() {
        if (done_) return std::nullopt;
        if (rng_) {
            const TimeNs t = poisson_next_;
            if (t >= sc_.duration) {
                done_ = true;
                return std::nullopt;
            }
            const double gap = rng_->exponential(mean_gap_);
            poisson_next_ += std::max<TimeNs>(1, std::llround(gap));
            return t;
        }
        while (true) {
            if (phase_start_ >= sc_.duration) {
                done_ = true;
                return std::nullopt;
            }
            const TimeNs t = phase_start_ + lattice_offset(k_, size_, phase_rate_);
            if (t >= phase_end_) {
                ++phase_idx_;
                load_phase();
                continue;
            }
            if (t >= sc_.duration) {
                done_ = true;
                return std::nullopt;
            }
            ++k_;
            return t;
        }
    }

  private:
    // Fills phase_start_/phase_end_/phase_rate_ for phase_idx_, skipping
    // silent or empty phases.
    void load_phase() {
        k_ = 0;
        if (const auto* c = std::get_if<ArrivalConstant>(&sc_.arrival)) {
            if (phase_idx_ > 0) {
                phase_start_ = sc_.duration;
                return;
            }
            phase_start_ = 0;
            phase_end_ = sc_.duration;
            phase_rate_ = c->rate;
            return;
        }
        if (const auto* b = std::get_if<ArrivalBurst>(&sc_.arrival)) {
            const TimeNs hi_len = static_cast<TimeNs>(
                std::llround(b->duty * static_cast<double>(b->period)));
            while (true) {
                const std::uint64_t cycle = phase_idx_ / 2;
                const bool high = phase_idx_ % 2 == 0;
                phase_start_ = static_cast<TimeNs>(cycle) * b->period + (high ? 0 : hi_len);
                phase_end_ = static_cast<TimeNs>(cycle) * b->period + (high ? hi_len : b->period);
                phase_rate_ = high ? b->rate_high : b->rate_low;
                if (phase_start_ >= phase_end_ && phase_start_ < sc_.duration) {
                    ++phase_idx_; // zero-length phase (duty 0 or 1)
                    continue;
                }
                return;
            }
        }
        const auto* o = std::get_if<ArrivalOnOff>(&sc_.arrival);
        assert(o);
        const TimeNs cycle_len = o->on_ns + o->off_ns;
        phase_start_ = static_cast<TimeNs>(phase_idx_) * cycle_len;
        phase_end_ = phase_start_ + o->on_ns;
        phase_rate_ = o->rate;
    }

    const Scenario& sc_;
    Bytes size_;
    bool done_ = false;

    std::uint64_t phase_idx_ = 0;
    std::uint64_t k_ = 0;
    TimeNs phase_start_ = 0;
    TimeNs phase_end_ = 0;
    RateBps phase_rate_ = 1;

    std::optional<Rng> rng_;
    double mean_gap_ = 0.0;
    TimeNs poisson_next_ = 0;
};

// Service-side model: what rate is in force at a given instant, and when a
// transmission starting at `start` completes. Rate changes take effect at
// the next service start, never mid-packet.
class DrainModel {
  public:
    explicit DrainModel(const Scenario& sc) : sc_(sc) {
        if (const auto* w = std::get_if<DrainRandomWalk>(&sc.drain)) {
            rng_.emplace(w->seed ? w->seed : sc.seed, kStreamDrain);
            walk_.push_back(w->mean_rate);
        }
    }

    RateBps rate_at(TimeNs t) {
        if (const auto* c = std::get_if<DrainConstant>(&sc_.drain)) return c->rate;
        if (const auto* s = std::get_if<DrainStep>(&sc_.drain))
            return t < s->t_step ? s->rate_before : s->rate_after;
        if (const auto* f = std::get_if<DrainFitsStarts>(&sc_.drain)) return f->rate;
        const auto* w = std::get_if<DrainRandomWalk>(&sc_.drain);
        const auto idx = static_cast<std::size_t>(t / w->step_period);
        while (walk_.size() <= idx) {
            const double up = (rng_->bits() & 1) ? 1.0 + w->step_pct / 100.0
                                                 : 1.0 - w->step_pct / 100.0;
            const double next = static_cast<double>(walk_.back()) * up;
            const RateBps lo = std::max<RateBps>(1, w->mean_rate / 4);
            const RateBps hi = w->mean_rate * 4;
            walk_.push_back(std::clamp<RateBps>(
                static_cast<RateBps>(std::llround(next)), lo, hi));
        }
        return walk_[idx];
    }

    TimeNs completion(TimeNs start, Bytes size) {
        if (const auto* f = std::get_if<DrainFitsStarts>(&sc_.drain)) {
            TimeNs t = start;
            if (t % f->stall_period < f->stall_len)
                t = t - t % f->stall_period + f->stall_len;
            auto tx = static_cast<TimeNs>(
                std::max<u128>(1, u128(size) * kNsPerSec / f->rate));
            while (true) {
                const TimeNs gap_end = (t / f->stall_period + 1) * f->stall_period;
                const TimeNs avail = gap_end - t;
                if (tx <= avail) return t + tx;
                tx -= avail;
                t = gap_end + f->stall_len;
            }
        }
        const RateBps r = rate_at(start);
        const auto tx = static_cast<TimeNs>(std::max<u128>(1, u128(size) * kNsPerSec / r));
        return start + tx;
    }

  private:
    const Scenario& sc_;
    std::optional<Rng> rng_;
    std::vector<RateBps> walk_;
};

// AQM state threaded through the run. The control algorithms are driven by
// dequeue-time samples of the configured estimator; enqueue-point
// application reuses the newest machinery state at arrival time.
class AqmRuntime {
  public:
    explicit AqmRuntime(const Scenario& sc) : cfg_(sc.aqm), rng_(sc.seed, kStreamMarker) {
        pi_.target = cfg_.pi_target;
        pi_.alpha = cfg_.pi_alpha;
        pi_.beta = cfg_.pi_beta;
        pi_.t_update = cfg_.pi_t_update;
        pi_.burst_heuristic = cfg_.pi_burst_heuristic;
        codel_.target = cfg_.codel_target;
        codel_.interval = cfg_.codel_interval;
        ramp_.min_th = cfg_.ramp_min_th;
        ramp_.max_th = cfg_.ramp_max_th;
        ramp_.max_p = cfg_.ramp_max_p;
        marker_.mode = cfg_.marker;
    }

    bool active() const { return cfg_.algorithm != AqmAlgorithm::None; }

    // Runs the control machinery on one dequeue sample. When apply_here is
    // true (dequeue application point) the returned decision binds to the
    // departing packet; otherwise the outcome is held for enqueue use.
    MarkDecision on_dequeue(std::optional<TimeNs> sample, TimeNs now, bool apply_here) {
        MarkDecision d;
        if (!active() || !sample) return d;
        last_sample_ = sample;
        const TimeNs s = *sample;
        switch (cfg_.algorithm) {
            case AqmAlgorithm::Pi: {
                if (now - last_pi_update_ >= pi_.t_update) {
                    pi_update(pi_, s);
                    last_pi_update_ = now;
                }
                double p = pi_.p;
                if (pi_suppressed(pi_, s)) p = 0.0;
                d.p_at_decision = p;
                if (apply_here) d.action = marker_decide(marker_, p, cfg_.signal, rng_);
                break;
            }
            case AqmAlgorithm::Codel: {
                const MarkDecision cd = codel_on_dequeue(codel_, s, now, cfg_.signal);
                if (apply_here) return cd;
                // Applied at enqueue: hold a fired signal for the next arrival.
                if (cd.action != MarkAction::Pass) {
                    pending_ = cd;
                }
                break;
            }
            case AqmAlgorithm::Ramp: {
                const double p = ramp_prob(ramp_, s);
                d.p_at_decision = p;
                if (apply_here) d.action = marker_decide(marker_, p, cfg_.signal, rng_);
                break;
            }
            case AqmAlgorithm::None: break;
        }
        return d;
    }

    MarkDecision at_enqueue(TimeNs) {
        MarkDecision d;
        if (!active()) return d;
        switch (cfg_.algorithm) {
            case AqmAlgorithm::Pi: {
                double p = pi_.p;
                if (pi_suppressed(pi_, last_sample_.value_or(0))) p = 0.0;
                d.p_at_decision = p;
                d.action = marker_decide(marker_, p, cfg_.signal, rng_);
                break;
            }
            case AqmAlgorithm::Codel: {
                d = pending_;
                pending_ = MarkDecision{};
                break;
            }
            case AqmAlgorithm::Ramp: {
                const double p = last_sample_ ? ramp_prob(ramp_, *last_sample_) : 0.0;
                d.p_at_decision = p;
                d.action = marker_decide(marker_, p, cfg_.signal, rng_);
                break;
            }
            case AqmAlgorithm::None: break;
        }
        d.applied_at = ApplicationPoint::Enqueue;
        return d;
    }

  private:
    const AqmConfig cfg_;
    PiState pi_;
    CodelState codel_;
    RampState ramp_;
    Marker marker_;
    Rng rng_;
    TimeNs last_pi_update_ = 0;
    std::optional<TimeNs> last_sample_;
    MarkDecision pending_;
};

void fill_oracle(std::vector<TraceRecord>& recs, RateBps final_rate) {
    const std::size_t n = recs.size();
    if (n == 0) return;
    std::vector<Bytes> prefix(n);
    Bytes run = 0;
    for (std::size_t i = 0; i < n; ++i) {
        run += recs[i].size;
        prefix[i] = run;
        assert(i == 0 || recs[i].t_deq > recs[i - 1].t_deq);
    }
    for (std::size_t i = 0; i < n; ++i) {
        const Bytes backlog = recs[i].backlog_deq;
        if (backlog == 0) {
            recs[i].oracle_drain = 0;
            continue;
        }
        // Count departures strictly after this record. The backlog figure
        // includes the departing packet, and the matching bytes on the far
        // side come off the following departures; under constant drain the
        // closed form backlog/R falls out exactly.
        const std::size_t a = i + 1;
        const Bytes base = prefix[i];
        const Bytes target = base + backlog;
        const auto it = std::lower_bound(prefix.begin() + static_cast<std::ptrdiff_t>(a),
                                         prefix.end(), target);
        if (it != prefix.end()) {
            const auto k = static_cast<std::size_t>(it - prefix.begin());
            recs[i].oracle_drain = recs[k].t_deq - recs[i].t_deq;
            continue;
        }
        const Bytes covered = prefix[n - 1] - base;
        const Bytes deficit = backlog - covered;
        const TimeNs last_t = std::max(recs[n - 1].t_deq, recs[i].t_deq);
        recs[i].oracle_drain = (last_t - recs[i].t_deq) +
            static_cast<TimeNs>(u128(deficit) * kNsPerSec / final_rate);
        recs[i].oracle_extrapolated = true;
    }
}

} // namespace

RunResult run(const Scenario& sc) {
    QueueCore queue(sc.queue_capacity);
    ArrivalGen arrivals(sc);
    DrainModel drain(sc);
    DrainRateEstimator rate_est(sc.min_window_packets, 0);
    AqmRuntime aqm(sc);

    RunResult rr;
    RunTotals& tot = rr.totals;
    const auto size = static_cast<std::uint32_t>(sc.packet_size);

    std::optional<TimeNs> next_arr = arrivals.next();
    std::optional<TimeNs> head_done;
    TimeNs last_completion = 0;

    const auto schedule_head = [&] {
        if (const Packet* h = queue.head()) {
            const TimeNs start = std::max(last_completion, h->ts_enq);
            head_done = drain.completion(start, h->size);
        } else {
            head_done = std::nullopt;
        }
    };

    const auto process_arrival = [&](TimeNs t) {
        tot.offered += size;
        ++tot.packets_offered;
        tot.last_arrival = t;

        MarkDecision d;
        if (sc.aqm.point == ApplicationPoint::Enqueue) d = aqm.at_enqueue(t);
        if (d.action == MarkAction::Drop) {
            tot.aqm_dropped += size;
            ++tot.packets_aqm_dropped;
            return;
        }
        const bool was_empty = queue.empty();
        if (!queue.enqueue(size, t, d.action, d.p_at_decision)) {
            tot.tail_dropped += size;
            ++tot.packets_tail_dropped;
            return;
        }
        if (was_empty) schedule_head();
    };

    const auto process_departure = [&](TimeNs t) {
        auto res = queue.dequeue();
        assert(res);
        const Packet& pk = res->packet;

        TraceRecord rec;
        rec.packet_id = pk.id;
        rec.t_enq = pk.ts_enq;
        rec.t_deq = t;
        rec.size = pk.size;
        rec.backlog_enq = pk.backlog_enq;
        rec.backlog_deq = res->backlog_deq;
        rec.raw_sojourn = raw_sojourn(pk, t);
        rec.scaled_exact = scaled_sojourn_exact(pk, res->backlog_deq, t);
        rec.scaled_lg = scaled_sojourn_lg_shift(pk, res->backlog_deq, t);
        rec.scaled_clz = scaled_sojourn_clz_shift(pk, res->backlog_deq, t);
        rec.backlog_over_rate = qdelay_from_backlog(res->backlog_deq, rate_est);
        rate_est.update(pk.size, t);

        std::optional<TimeNs> sample;
        switch (sc.estimator) {
            case Estimator::RawSojourn: sample = rec.raw_sojourn; break;
            case Estimator::ScaledExact: sample = rec.scaled_exact; break;
            case Estimator::ScaledLgShift: sample = rec.scaled_lg; break;
            case Estimator::ScaledClzShift: sample = rec.scaled_clz; break;
            case Estimator::BacklogRate: sample = rec.backlog_over_rate; break;
        }
        const bool apply_here = sc.aqm.point == ApplicationPoint::Dequeue;
        const MarkDecision d = aqm.on_dequeue(sample, t, apply_here);
        if (apply_here) {
            rec.mark_action = d.action;
            rec.p_at_decision = d.p_at_decision;
        } else {
            rec.mark_action = pk.enq_action;
            rec.p_at_decision = pk.enq_p;
        }

        if (rec.mark_action == MarkAction::Drop) {
            // The packet spent its serialization slot and then died at the
            // egress: it appears in the departure log but is not delivered.
            tot.aqm_dropped += pk.size;
            ++tot.packets_aqm_dropped;
        } else {
            tot.delivered += pk.size;
            ++tot.packets_delivered;
        }
        rr.records.push_back(rec);
        last_completion = t;
        schedule_head();
    };

    while (true) {
        const bool dep_ready = head_done && *head_done <= sc.duration;
        if (dep_ready && (!next_arr || *head_done <= *next_arr)) {
            process_departure(*head_done);
        } else if (next_arr) {
            process_arrival(*next_arr);
            next_arr = arrivals.next();
        } else {
            break;
        }
    }

    tot.final_backlog = queue.backlog();
    fill_oracle(rr.records, drain.rate_at(sc.duration));
    return rr;
}

std::optional<TimeNs> estimator_value(const TraceRecord& r, Estimator e) {
    switch (e) {
        case Estimator::RawSojourn: return r.raw_sojourn;
        case Estimator::ScaledExact: return r.scaled_exact;
        case Estimator::ScaledLgShift: return r.scaled_lg;
        case Estimator::ScaledClzShift: return r.scaled_clz;
        case Estimator::BacklogRate: return r.backlog_over_rate;
    }
    return std::nullopt;
}

std::optional<StepLag> detect_step_lag(const std::vector<TraceRecord>& records, TimeNs threshold,
                                       TimeNs t_onset, Estimator est, ApplicationPoint point) {
    const std::size_t n = records.size();

    std::optional<std::size_t> oracle_idx;
    for (std::size_t i = 0; i < n; ++i) {
        if (records[i].t_deq < t_onset) continue;
        if (records[i].oracle_drain >= threshold) {
            oracle_idx = i;
            break;
        }
    }
    if (!oracle_idx) return std::nullopt;

    std::optional<std::size_t> signal_idx;
    if (point == ApplicationPoint::Dequeue) {
        for (std::size_t i = 0; i < n; ++i) {
            if (records[i].t_deq < t_onset) continue;
            const auto v = estimator_value(records[i], est);
            if (v && *v >= threshold) {
                signal_idx = i;
                break;
            }
        }
    } else {
        // Decision at enqueue uses the newest sample with t_deq <= t_enq;
        // the signal then rides the queue and departs with its packet.
        // Records are in departure order, which is also enqueue order.
        std::size_t j = 0;
        std::optional<TimeNs> visible;
        for (std::size_t i = 0; i < n; ++i) {
            while (j < n && records[j].t_deq <= records[i].t_enq) {
                visible = estimator_value(records[j], est);
                ++j;
            }
            if (records[i].t_enq < t_onset) continue;
            if (visible && *visible >= threshold) {
                signal_idx = i;
                break;
            }
        }
    }
    if (!signal_idx) return std::nullopt;

    StepLag out;
    out.signal_record = *signal_idx;
    out.oracle_record = *oracle_idx;
    out.lag = records[*signal_idx].t_deq - records[*oracle_idx].t_deq;
    return out;
}

std::optional<IdleTailStats> idle_tail_stats(const std::vector<TraceRecord>& records,
                                             const RunTotals& totals, TimeNs target,
                                             Estimator est) {
    if (totals.last_arrival < 0) return std::nullopt;
    IdleTailStats st;
    st.last_arrival = totals.last_arrival;
    for (const auto& r : records) {
        if (r.t_deq <= totals.last_arrival) continue;
        ++st.tail_packets;
        const bool fired = r.mark_action != MarkAction::Pass;
        if (fired) ++st.tail_signals;
        const auto v = estimator_value(r, est);
        if (!st.first_below_target && v && *v < target) st.first_below_target = r.t_deq;
        if (st.first_below_target && fired) ++st.signals_after_below;
    }
    if (st.tail_packets == 0) return std::nullopt;
    return st;
}

EstimatorError estimator_error(const std::vector<TraceRecord>& records, Estimator e) {
    EstimatorError out;
    double sum_sq = 0.0, sum_abs = 0.0, sum = 0.0;
    for (const auto& r : records) {
        if (r.oracle_extrapolated) continue;
        const auto v = estimator_value(r, e);
        if (!v) continue;
        const double d = static_cast<double>(*v - r.oracle_drain);
        sum_sq += d * d;
        sum_abs += std::fabs(d);
        sum += d;
        ++out.n;
    }
    if (out.n > 0) {
        const auto nd = static_cast<double>(out.n);
        out.rms = std::sqrt(sum_sq / nd);
        out.mean_abs = sum_abs / nd;
        out.mean_signed = sum / nd;
    }
    return out;
}

} // namespace aqmsim
