#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "aqmsim/scenario.hpp"
#include "aqmsim/types.hpp"

namespace aqmsim {

// One row per dequeued packet. Every estimator is evaluated on every
// packet; the configured one additionally drives the AQM. oracle_drain is
// filled in after the run from the departure log: the realized time for
// backlog_deq bytes to leave the queue, extrapolated at the final drain
// rate (and flagged) when the run ends first.
struct TraceRecord {
    std::uint64_t packet_id = 0;
    TimeNs t_enq = 0;
    TimeNs t_deq = 0;
    std::uint32_t size = 0;
    Bytes backlog_enq = 0;
    Bytes backlog_deq = 0;
    TimeNs raw_sojourn = 0;
    TimeNs scaled_exact = 0;
    TimeNs scaled_lg = 0;
    TimeNs scaled_clz = 0;
    std::optional<TimeNs> backlog_over_rate; // missing until a rate window completes
    TimeNs oracle_drain = 0;
    MarkAction mark_action = MarkAction::Pass;
    double p_at_decision = 0.0;
    bool oracle_extrapolated = false;
};

struct RunTotals {
    Bytes offered = 0;
    Bytes delivered = 0;
    Bytes tail_dropped = 0;
    Bytes aqm_dropped = 0;
    Bytes final_backlog = 0;
    std::uint64_t packets_offered = 0;
    std::uint64_t packets_delivered = 0;
    std::uint64_t packets_tail_dropped = 0;
    std::uint64_t packets_aqm_dropped = 0;
    TimeNs last_arrival = -1; // -1 when no packet ever arrived
};

struct RunResult {
    std::vector<TraceRecord> records;
    RunTotals totals;
};

// Runs the scenario to completion. Arrivals happen strictly before
// `duration`, departures up to and including it; whatever is left in the
// queue at the end is final_backlog.
RunResult run(const Scenario& sc);

// The estimator's delay sample on one record; empty when the rate-based
// estimate is not yet available.
std::optional<TimeNs> estimator_value(const TraceRecord& r, Estimator e);

// Detection delay of a threshold-crossing signal relative to the oracle.
// The oracle crossing is the first record at or after t_onset whose
// realized drain time reaches the threshold. For dequeue application the
// signal departs with the first record whose estimate reaches it; for
// enqueue application the decision uses the newest sample with
// t_deq <= t_enq and the signal departs with the deciding packet itself.
struct StepLag {
    TimeNs lag = 0;
    std::size_t signal_record = 0; // record whose departure carries the signal
    std::size_t oracle_record = 0;
};
std::optional<StepLag> detect_step_lag(const std::vector<TraceRecord>& records, TimeNs threshold,
                                       TimeNs t_onset, Estimator est, ApplicationPoint point);

// Signals issued on packets dequeued after the final arrival. Empty when
// arrivals ran to the end of the trace. first_below_target is the first
// tail record whose configured-estimator sample sits below `target`.
struct IdleTailStats {
    TimeNs last_arrival = 0;
    std::uint64_t tail_packets = 0;
    std::uint64_t tail_signals = 0;
    std::optional<TimeNs> first_below_target;
    std::uint64_t signals_after_below = 0;
};
std::optional<IdleTailStats> idle_tail_stats(const std::vector<TraceRecord>& records,
                                             const RunTotals& totals, TimeNs target, Estimator est);

// Accuracy vs the oracle over records with a real (non-extrapolated)
// oracle value and a present estimate.
struct EstimatorError {
    std::uint64_t n = 0;
    double rms = 0.0;
    double mean_abs = 0.0;
    double mean_signed = 0.0;
};
EstimatorError estimator_error(const std::vector<TraceRecord>& records, Estimator e);

} // namespace aqmsim
