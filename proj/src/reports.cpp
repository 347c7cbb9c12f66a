#include "aqmsim/reports.hpp"

#include <charconv>
#include <cinttypes>
#include <cstdio>

namespace aqmsim {
namespace {

using u128 = unsigned __int128;

void put_u64(std::string& out, std::uint64_t v) {
    char buf[24];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, r.ptr);
}

void put_i64(std::string& out, std::int64_t v) {
    char buf[24];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, r.ptr);
}

void put_double(std::string& out, double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, r.ptr);
}

} // namespace

std::string trace_csv(const std::vector<TraceRecord>& records) {
    std::string out =
        "packet_id,t_enq,t_deq,size,backlog_enq,backlog_deq,raw_sojourn,scaled_exact,"
        "scaled_lg,scaled_clz,backlog_over_rate,oracle_drain,mark_action,p_at_decision,"
        "oracle_extrapolated\n";
    for (const auto& r : records) {
        put_u64(out, r.packet_id);
        out += ',';
        put_i64(out, r.t_enq);
        out += ',';
        put_i64(out, r.t_deq);
        out += ',';
        put_u64(out, r.size);
        out += ',';
        put_u64(out, r.backlog_enq);
        out += ',';
        put_u64(out, r.backlog_deq);
        out += ',';
        put_i64(out, r.raw_sojourn);
        out += ',';
        put_i64(out, r.scaled_exact);
        out += ',';
        put_i64(out, r.scaled_lg);
        out += ',';
        put_i64(out, r.scaled_clz);
        out += ',';
        if (r.backlog_over_rate) put_i64(out, *r.backlog_over_rate);
        out += ',';
        put_i64(out, r.oracle_drain);
        out += ',';
        out += mark_action_name(r.mark_action);
        out += ',';
        put_double(out, r.p_at_decision);
        out += ',';
        out += r.oracle_extrapolated ? '1' : '0';
        out += '\n';
    }
    return out;
}

LagMatrix lag_matrix(const std::vector<TraceRecord>& records, TimeNs threshold, TimeNs t_onset,
                     std::uint32_t min_window_packets) {
    LagMatrix m;
    m.threshold = threshold;
    m.t_onset = t_onset;
    const Estimator cols[3] = {Estimator::RawSojourn, Estimator::ScaledExact,
                               Estimator::BacklogRate};
    const ApplicationPoint points[2] = {ApplicationPoint::Enqueue, ApplicationPoint::Dequeue};
    for (int pi = 0; pi < 2; ++pi) {
        for (int ci = 0; ci < 3; ++ci) {
            const auto lag = detect_step_lag(records, threshold, t_onset, cols[ci], points[pi]);
            if (!lag) continue;
            LagCell& cell = m.cell[pi][ci];
            cell.crossed = true;
            cell.lag = lag->lag;
            const TraceRecord& sig = records[lag->signal_record];
            if (cols[ci] == Estimator::BacklogRate) {
                // rate = backlog/qdelay, so the window that produced it
                // spanned window_bytes/rate = window_bytes*qdelay/backlog.
                if (sig.backlog_over_rate && sig.backlog_deq > 0) {
                    const u128 wb = u128(min_window_packets) * sig.size;
                    cell.unit = static_cast<TimeNs>(
                        wb * static_cast<std::uint64_t>(*sig.backlog_over_rate) /
                        sig.backlog_deq);
                }
            } else {
                cell.unit = sig.raw_sojourn;
            }
            if (cell.unit > 0)
                cell.normalized =
                    static_cast<double>(cell.lag) / static_cast<double>(cell.unit);
        }
    }
    return m;
}

namespace {

const char* point_name(int pi) { return pi == 0 ? "enqueue" : "dequeue"; }
const char* col_name(int ci) {
    switch (ci) {
        case 0: return "raw_sojourn";
        case 1: return "scaled_sojourn";
        default: return "backlog_rate";
    }
}

} // namespace

std::string lag_matrix_csv(const LagMatrix& m) {
    std::string out = "point,technique,crossed,lag_ns,unit_ns,normalized\n";
    for (int pi = 0; pi < 2; ++pi) {
        for (int ci = 0; ci < 3; ++ci) {
            const LagCell& c = m.cell[pi][ci];
            out += point_name(pi);
            out += ',';
            out += col_name(ci);
            out += ',';
            out += c.crossed ? '1' : '0';
            out += ',';
            put_i64(out, c.lag);
            out += ',';
            put_i64(out, c.unit);
            out += ',';
            put_double(out, c.normalized);
            out += '\n';
        }
    }
    return out;
}

std::string lag_matrix_table(const LagMatrix& m) {
    // Three value columns, two rows, lag in ms with the normalized factor.
    char buf[160];
    std::string out;
    std::snprintf(buf, sizeof buf, "%-10s %-22s %-22s %-22s\n", "", "raw sojourn",
                  "scaled sojourn", "backlog/rate");
    out += buf;
    for (int pi = 0; pi < 2; ++pi) {
        std::string cells[3];
        for (int ci = 0; ci < 3; ++ci) {
            const LagCell& c = m.cell[pi][ci];
            if (!c.crossed) {
                cells[ci] = "not crossed";
                continue;
            }
            const char unit = ci == 2 ? 'r' : 's';
            std::snprintf(buf, sizeof buf, "%.3fms (%.2f%c)",
                          static_cast<double>(c.lag) / 1e6, c.normalized, unit);
            cells[ci] = buf;
        }
        std::snprintf(buf, sizeof buf, "%-10s %-22s %-22s %-22s\n", point_name(pi),
                      cells[0].c_str(), cells[1].c_str(), cells[2].c_str());
        out += buf;
    }
    return out;
}

std::string idle_tail_csv(const std::vector<TraceRecord>& records, const RunTotals& totals,
                          TimeNs target, Estimator est) {
    std::string out =
        "last_arrival,tail_packets,tail_signals,first_below_target,signals_after_below\n";
    const auto st = idle_tail_stats(records, totals, target, est);
    if (!st) return out;
    put_i64(out, st->last_arrival);
    out += ',';
    put_u64(out, st->tail_packets);
    out += ',';
    put_u64(out, st->tail_signals);
    out += ',';
    if (st->first_below_target) put_i64(out, *st->first_below_target);
    out += ',';
    put_u64(out, st->signals_after_below);
    out += '\n';
    return out;
}

std::string mark_spacing_csv(const std::vector<TraceRecord>& records) {
    std::string out = "seq,packet_id,t_deq,action,gap_packets,gap_ns\n";
    std::uint64_t seq = 0;
    std::size_t prev_idx = 0;
    TimeNs prev_t = 0;
    bool have_prev = false;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        if (r.mark_action == MarkAction::Pass) continue;
        put_u64(out, seq++);
        out += ',';
        put_u64(out, r.packet_id);
        out += ',';
        put_i64(out, r.t_deq);
        out += ',';
        out += mark_action_name(r.mark_action);
        out += ',';
        put_u64(out, have_prev ? i - prev_idx : i + 1);
        out += ',';
        put_i64(out, have_prev ? r.t_deq - prev_t : r.t_deq);
        out += '\n';
        prev_idx = i;
        prev_t = r.t_deq;
        have_prev = true;
    }
    return out;
}

std::string error_stats_csv(const std::vector<TraceRecord>& records) {
    std::string out = "estimator,n,rms_ns,mean_abs_ns,mean_signed_ns\n";
    for (int i = 0; i < 5; ++i) {
        const auto e = static_cast<Estimator>(i);
        const EstimatorError err = estimator_error(records, e);
        out += estimator_name(e);
        out += ',';
        put_u64(out, err.n);
        out += ',';
        put_double(out, err.rms);
        out += ',';
        put_double(out, err.mean_abs);
        out += ',';
        put_double(out, err.mean_signed);
        out += '\n';
    }
    return out;
}

} // namespace aqmsim
