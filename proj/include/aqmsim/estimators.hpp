#pragma once

#include <cstdint>
#include <optional>

#include "aqmsim/bitops.hpp"
#include "aqmsim/queue_core.hpp"
#include "aqmsim/types.hpp"

namespace aqmsim {

// Plain sojourn time: now - ts_enq.
TimeNs raw_sojourn(const Packet& p, TimeNs now);

// Sojourn scaled by the backlog ratio backlog_deq / backlog_enq, rounded to
// the nearest nanosecond in 128-bit arithmetic. With steady backlog the
// ratio is one and this degenerates to the raw sojourn; a backlog that grew
// behind the packet scales the estimate up, a draining queue scales it down.
TimeNs scaled_sojourn_exact(const Packet& p, Bytes backlog_deq, TimeNs now);

// Approximation that replaces the ratio with its nearest power of two:
// shift by floor(log2(backlog_deq) - log2(backlog_enq) + 1/2). Error factor
// stays within [1/sqrt(2), sqrt(2)] and is unbiased in log space. Backlogs
// are taken in the 32-bit domain.
TimeNs scaled_sojourn_lg_shift(const Packet& p, Bytes backlog_deq, TimeNs now);

// Cheaper approximation using leading-zero counts on the 32-bit backlogs:
// shift by clz(backlog_enq) - clz(backlog_deq). Both logs truncate, so the
// error factor is anywhere in (1/2, 2) and persists for a given operating
// point rather than averaging out.
TimeNs scaled_sojourn_clz_shift(const Packet& p, Bytes backlog_deq, TimeNs now);

// Windowed departure-rate measurement. Accumulates departed bytes; once
// min_window_packets have left since window_start the rate is set to
// window_bytes / (now - window_start) and a fresh window opens at now. The
// rate holds its last value (or zero if no window ever completed) while
// packets are scarce: staleness under idle is intentional and observable.
struct DrainRateEstimator {
    Bytes window_bytes = 0;
    TimeNs window_start = 0;
    std::uint32_t window_packets = 0;
    RateBps rate = 0; // bytes/s, 0 = no estimate yet
    std::uint32_t min_window_packets = 16;

    explicit DrainRateEstimator(std::uint32_t min_packets = 16, TimeNs start = 0)
        : window_start(start), min_window_packets(min_packets) {}

    // Call once per departure, in departure order. Returns true when the
    // window completed and the rate was refreshed.
    bool update(std::uint32_t departed_size, TimeNs now);
};

// backlog * 1e9 / rate, or nullopt while no rate estimate exists.
// A zero backlog yields zero.
std::optional<TimeNs> qdelay_from_backlog(Bytes backlog, const DrainRateEstimator& est);

} // namespace aqmsim
