#pragma once

#include <string>
#include <vector>

#include "aqmsim/sim.hpp"

namespace aqmsim {

// CSV renderings of a finished run. All numbers are emitted with
// std::to_chars: locale-independent, shortest round-trip for doubles, so
// identical runs give byte-identical files.

// One row per dequeued packet, columns in TraceRecord field order, plus the
// trailing oracle_extrapolated flag. backlog_over_rate is empty while no
// rate estimate existed.
std::string trace_csv(const std::vector<TraceRecord>& records);

// Threshold-crossing lag of each estimator/application-point combination
// against the oracle, normalized per cell: sojourn columns by the
// contemporaneous sojourn (the raw_sojourn of the record that carries the
// signal out), the rate column by the duration of the rate window in force
// there (recovered as window_bytes / rate).
struct LagCell {
    bool crossed = false;
    TimeNs lag = 0;
    TimeNs unit = 0;        // contemporaneous s (or r for the rate column)
    double normalized = 0.0; // lag / unit
};

struct LagMatrix {
    // [point][column]: point 0 = enqueue, 1 = dequeue;
    // column 0 = raw sojourn, 1 = scaled sojourn, 2 = backlog/rate.
    LagCell cell[2][3];
    TimeNs threshold = 0;
    TimeNs t_onset = 0;
};

LagMatrix lag_matrix(const std::vector<TraceRecord>& records, TimeNs threshold, TimeNs t_onset,
                     std::uint32_t min_window_packets);
std::string lag_matrix_csv(const LagMatrix& m);
// Aligned text rendering for terminals.
std::string lag_matrix_table(const LagMatrix& m);

std::string idle_tail_csv(const std::vector<TraceRecord>& records, const RunTotals& totals,
                          TimeNs target, Estimator est);

// One row per issued signal with its distance from the previous one.
std::string mark_spacing_csv(const std::vector<TraceRecord>& records);

// Accuracy of every estimator against the oracle.
std::string error_stats_csv(const std::vector<TraceRecord>& records);

} // namespace aqmsim
