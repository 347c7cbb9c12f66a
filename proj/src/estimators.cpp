#include "aqmsim/estimators.hpp"

namespace aqmsim {

using u128 = unsigned __int128;

TimeNs raw_sojourn(const Packet& p, TimeNs now) {
    assert(now >= p.ts_enq);
    return now - p.ts_enq;
}

TimeNs scaled_sojourn_exact(const Packet& p, Bytes backlog_deq, TimeNs now) {
    assert(p.backlog_enq >= 1 && backlog_deq >= 1);
    const u128 num = static_cast<u128>(raw_sojourn(p, now)) * backlog_deq;
    const u128 rounded = (num + p.backlog_enq / 2) / p.backlog_enq;
    return static_cast<TimeNs>(rounded);
}

TimeNs scaled_sojourn_lg_shift(const Packet& p, Bytes backlog_deq, TimeNs now) {
    const int k = lg_shift_amount(backlog32(backlog_deq), backlog32(p.backlog_enq));
    return shift_time(raw_sojourn(p, now), k);
}

TimeNs scaled_sojourn_clz_shift(const Packet& p, Bytes backlog_deq, TimeNs now) {
    const int k = clz_shift_amount(backlog32(backlog_deq), backlog32(p.backlog_enq));
    return shift_time(raw_sojourn(p, now), k);
}

bool DrainRateEstimator::update(std::uint32_t departed_size, TimeNs now) {
    window_bytes += departed_size;
    ++window_packets;
    if (window_packets < min_window_packets)
        return false;
    const TimeNs span = now - window_start;
    if (span <= 0)
        return false; // zero-width window, keep accumulating
    rate = static_cast<RateBps>(
        static_cast<u128>(window_bytes) * kNsPerSec / static_cast<std::uint64_t>(span));
    window_bytes = 0;
    window_packets = 0;
    window_start = now;
    return true;
}

std::optional<TimeNs> qdelay_from_backlog(Bytes backlog, const DrainRateEstimator& est) {
    if (est.rate == 0)
        return std::nullopt;
    if (backlog == 0)
        return TimeNs{0};
    return static_cast<TimeNs>(static_cast<u128>(backlog) * kNsPerSec / est.rate);
}

} // namespace aqmsim
