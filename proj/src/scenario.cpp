#include "aqmsim/scenario.hpp"

#include <array>
#include <cctype>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <string_view>
#include <vector>

namespace aqmsim {
namespace {

std::string trim(std::string_view sv) {
    const auto* ws = " \t\r";
    const auto b = sv.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    const auto e = sv.find_last_not_of(ws);
    return std::string(sv.substr(b, e - b + 1));
}

// Full-consume numeric parse of the prefix before a unit suffix. from_chars
// keeps the decimal point a '.' whatever locale the host process runs in,
// and rejects hex, inf and nan spellings.
std::optional<long double> parse_number(const std::string& s) {
    if (s.empty()) return std::nullopt;
    double v = 0.0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc{} || r.ptr != s.data() + s.size()) return std::nullopt;
    if (!std::isfinite(v)) return std::nullopt;
    return static_cast<long double>(v);
}

std::optional<double> parse_double_str(const std::string& s) {
    const auto v = parse_number(s);
    if (!v) return std::nullopt;
    return static_cast<double>(*v);
}

std::optional<std::uint64_t> parse_u64_str(const std::string& s) {
    if (s.empty()) return std::nullopt;
    for (char c : s)
        if (!std::isdigit(static_cast<unsigned char>(c))) return std::nullopt;
    errno = 0;
    char* end = nullptr;
    const unsigned long long v = strtoull(s.c_str(), &end, 10);
    if (errno != 0 || end != s.c_str() + s.size()) return std::nullopt;
    return v;
}

std::optional<bool> parse_bool_str(const std::string& s) {
    if (s == "on" || s == "true") return true;
    if (s == "off" || s == "false") return false;
    return std::nullopt;
}

bool integral(long double v) {
    return std::fabs(v - std::nearbyint(v)) < 1e-6L;
}

struct Suffix {
    std::string_view text;
    long double mult;
    bool bits;
};

} // namespace

std::optional<TimeNs> parse_time(const std::string& text) {
    static constexpr std::array<Suffix, 4> units{{
        {"ns", 1.0L, false}, {"us", 1e3L, false}, {"ms", 1e6L, false}, {"s", 1e9L, false}}};
    for (const auto& u : units) {
        if (text.size() <= u.text.size()) continue;
        if (std::string_view(text).substr(text.size() - u.text.size()) != u.text) continue;
        const auto num = parse_number(text.substr(0, text.size() - u.text.size()));
        if (!num || *num < 0) return std::nullopt;
        return static_cast<TimeNs>(std::llround(*num * u.mult));
    }
    return std::nullopt;
}

std::optional<RateBps> parse_rate(const std::string& text) {
    std::string body = text;
    if (body.size() > 2 && body.ends_with("/s")) body.resize(body.size() - 2);
    // Longest suffix first so "Mbit" wins over "bit" and "MB" over "B".
    static constexpr std::array<Suffix, 12> units{{
        {"Gbit", 1e9L, true}, {"Mbit", 1e6L, true}, {"kbit", 1e3L, true}, {"bit", 1.0L, true},
        {"Gb", 1e9L, true},   {"Mb", 1e6L, true},   {"kb", 1e3L, true},
        {"GB", 1e9L, false},  {"MB", 1e6L, false},  {"kB", 1e3L, false},
        {"b", 1.0L, true},    {"B", 1.0L, false}}};
    for (const auto& u : units) {
        if (body.size() <= u.text.size()) continue;
        if (std::string_view(body).substr(body.size() - u.text.size()) != u.text) continue;
        const auto num = parse_number(body.substr(0, body.size() - u.text.size()));
        if (!num || *num < 0) return std::nullopt;
        long double v = *num * u.mult;
        if (!integral(v)) return std::nullopt;
        if (u.bits) {
            const auto bits = static_cast<std::uint64_t>(std::nearbyint(v));
            if (bits % 8 != 0) return std::nullopt; // must be whole bytes/s
            return bits / 8;
        }
        return static_cast<RateBps>(std::nearbyint(v));
    }
    return std::nullopt;
}

std::optional<Bytes> parse_size(const std::string& text) {
    static constexpr std::array<Suffix, 4> units{{
        {"GB", 1e9L, false}, {"MB", 1e6L, false}, {"kB", 1e3L, false}, {"B", 1.0L, false}}};
    for (const auto& u : units) {
        if (text.size() <= u.text.size()) continue;
        if (std::string_view(text).substr(text.size() - u.text.size()) != u.text) continue;
        const auto num = parse_number(text.substr(0, text.size() - u.text.size()));
        if (!num || *num < 0 || !integral(*num * u.mult)) return std::nullopt;
        return static_cast<Bytes>(std::nearbyint(*num * u.mult));
    }
    return std::nullopt;
}

namespace {

// Applies one key. Returns an error message, empty string on success.
std::string apply_key(Scenario& sc, const std::string& key, const std::string& value) {
    const auto bad = [&](const char* what) { return std::string(what); };

    const auto want_time = [&](TimeNs& out) -> std::string {
        const auto v = parse_time(value);
        if (!v) return bad("expected a time with unit (ns/us/ms/s)");
        out = *v;
        return {};
    };
    const auto want_rate = [&](RateBps& out) -> std::string {
        const auto v = parse_rate(value);
        if (!v) return bad("expected a rate (bit/s or B/s forms, whole bytes per second)");
        out = *v;
        return {};
    };
    const auto want_double = [&](double& out) -> std::string {
        const auto v = parse_double_str(value);
        if (!v) return bad("expected a number");
        out = *v;
        return {};
    };
    const auto want_u64 = [&](std::uint64_t& out) -> std::string {
        const auto v = parse_u64_str(value);
        if (!v) return bad("expected an unsigned integer");
        out = *v;
        return {};
    };
    const auto want_bool = [&](bool& out) -> std::string {
        const auto v = parse_bool_str(value);
        if (!v) return bad("expected on/off");
        out = *v;
        return {};
    };

    if (key == "duration") return want_time(sc.duration);
    if (key == "packet_size") {
        const auto v = parse_size(value);
        if (!v) return bad("expected a size (B/kB/MB)");
        sc.packet_size = *v;
        return {};
    }
    if (key == "seed") return want_u64(sc.seed);
    if (key == "estimator") {
        for (int i = 0; i < 5; ++i) {
            const auto e = static_cast<Estimator>(i);
            if (value == estimator_name(e)) {
                sc.estimator = e;
                return {};
            }
        }
        return bad("unknown estimator");
    }
    if (key == "rate.min_window_packets") {
        std::uint64_t v = 0;
        if (auto err = want_u64(v); !err.empty()) return err;
        if (v == 0 || v > 0xffffffffull) return bad("window must be in [1, 2^32)");
        sc.min_window_packets = static_cast<std::uint32_t>(v);
        return {};
    }
    if (key == "report.threshold") return want_time(sc.report_threshold);
    if (key == "queue.capacity") {
        const auto v = parse_size(value);
        if (!v) return bad("expected a size (B/kB/MB)");
        sc.queue_capacity = *v;
        return {};
    }

    if (key == "arrival.process") {
        if (value == "constant") sc.arrival = ArrivalConstant{};
        else if (value == "burst") sc.arrival = ArrivalBurst{};
        else if (value == "onoff") sc.arrival = ArrivalOnOff{};
        else if (value == "poisson") sc.arrival = ArrivalPoisson{};
        else return bad("unknown arrival process");
        return {};
    }
    if (key == "arrival.rate") {
        if (auto* c = std::get_if<ArrivalConstant>(&sc.arrival)) return want_rate(c->rate);
        if (auto* o = std::get_if<ArrivalOnOff>(&sc.arrival)) return want_rate(o->rate);
        if (auto* p = std::get_if<ArrivalPoisson>(&sc.arrival)) return want_rate(p->mean_rate);
        return bad("arrival.rate does not apply to a burst source (use arrival.burst.*)");
    }
    if (key.starts_with("arrival.burst.")) {
        auto* b = std::get_if<ArrivalBurst>(&sc.arrival);
        if (!b) return bad("requires arrival.process = burst");
        if (key == "arrival.burst.high") return want_rate(b->rate_high);
        if (key == "arrival.burst.low") return want_rate(b->rate_low);
        if (key == "arrival.burst.period") return want_time(b->period);
        if (key == "arrival.burst.duty") return want_double(b->duty);
        return bad("unknown key");
    }
    if (key.starts_with("arrival.onoff.")) {
        auto* o = std::get_if<ArrivalOnOff>(&sc.arrival);
        if (!o) return bad("requires arrival.process = onoff");
        if (key == "arrival.onoff.on") return want_time(o->on_ns);
        if (key == "arrival.onoff.off") return want_time(o->off_ns);
        return bad("unknown key");
    }
    if (key == "arrival.poisson.seed") {
        auto* p = std::get_if<ArrivalPoisson>(&sc.arrival);
        if (!p) return bad("requires arrival.process = poisson");
        return want_u64(p->seed);
    }

    if (key == "drain.process") {
        if (value == "constant") sc.drain = DrainConstant{};
        else if (value == "step") sc.drain = DrainStep{};
        else if (value == "fits_starts") sc.drain = DrainFitsStarts{};
        else if (value == "random_walk") sc.drain = DrainRandomWalk{};
        else return bad("unknown drain process");
        return {};
    }
    if (key == "drain.rate") {
        if (auto* c = std::get_if<DrainConstant>(&sc.drain)) return want_rate(c->rate);
        if (auto* s = std::get_if<DrainStep>(&sc.drain)) return want_rate(s->rate_before);
        if (auto* f = std::get_if<DrainFitsStarts>(&sc.drain)) return want_rate(f->rate);
        if (auto* w = std::get_if<DrainRandomWalk>(&sc.drain)) return want_rate(w->mean_rate);
        return bad("unknown key");
    }
    if (key.starts_with("drain.step.")) {
        auto* s = std::get_if<DrainStep>(&sc.drain);
        if (!s) return bad("requires drain.process = step");
        if (key == "drain.step.rate_after") return want_rate(s->rate_after);
        if (key == "drain.step.t") return want_time(s->t_step);
        return bad("unknown key");
    }
    if (key.starts_with("drain.stall.")) {
        auto* f = std::get_if<DrainFitsStarts>(&sc.drain);
        if (!f) return bad("requires drain.process = fits_starts");
        if (key == "drain.stall.period") return want_time(f->stall_period);
        if (key == "drain.stall.len") return want_time(f->stall_len);
        return bad("unknown key");
    }
    if (key.starts_with("drain.walk.")) {
        auto* w = std::get_if<DrainRandomWalk>(&sc.drain);
        if (!w) return bad("requires drain.process = random_walk");
        if (key == "drain.walk.step_pct") return want_double(w->step_pct);
        if (key == "drain.walk.period") return want_time(w->step_period);
        if (key == "drain.walk.seed") return want_u64(w->seed);
        return bad("unknown key");
    }

    if (key == "aqm.algorithm") {
        if (value == "none") sc.aqm.algorithm = AqmAlgorithm::None;
        else if (value == "pi") sc.aqm.algorithm = AqmAlgorithm::Pi;
        else if (value == "codel") sc.aqm.algorithm = AqmAlgorithm::Codel;
        else if (value == "ramp") sc.aqm.algorithm = AqmAlgorithm::Ramp;
        else return bad("unknown algorithm");
        return {};
    }
    if (key == "aqm.point") {
        if (value == "enqueue") sc.aqm.point = ApplicationPoint::Enqueue;
        else if (value == "dequeue") sc.aqm.point = ApplicationPoint::Dequeue;
        else return bad("expected enqueue/dequeue");
        return {};
    }
    if (key == "aqm.signal") {
        if (value == "mark") sc.aqm.signal = Signal::EcnMark;
        else if (value == "drop") sc.aqm.signal = Signal::Drop;
        else return bad("expected mark/drop");
        return {};
    }
    if (key == "aqm.marker") {
        if (value == "random") sc.aqm.marker = MarkerMode::RandomBernoulli;
        else if (value == "deterministic") sc.aqm.marker = MarkerMode::DeterministicInterval;
        else return bad("expected random/deterministic");
        return {};
    }
    if (key == "aqm.pi.target") return want_time(sc.aqm.pi_target);
    if (key == "aqm.pi.alpha") return want_double(sc.aqm.pi_alpha);
    if (key == "aqm.pi.beta") return want_double(sc.aqm.pi_beta);
    if (key == "aqm.pi.t_update") return want_time(sc.aqm.pi_t_update);
    if (key == "aqm.pi.burst_heuristic") return want_bool(sc.aqm.pi_burst_heuristic);
    if (key == "aqm.codel.target") return want_time(sc.aqm.codel_target);
    if (key == "aqm.codel.interval") return want_time(sc.aqm.codel_interval);
    if (key == "aqm.ramp.min_th") return want_time(sc.aqm.ramp_min_th);
    if (key == "aqm.ramp.max_th") return want_time(sc.aqm.ramp_max_th);
    if (key == "aqm.ramp.max_p") return want_double(sc.aqm.ramp_max_p);

    return bad("unknown key");
}

std::optional<ConfigError> validate(const Scenario& sc) {
    const auto fail = [](std::string key, std::string msg) {
        return ConfigError{0, std::move(key), std::move(msg)};
    };
    if (sc.duration <= 0) return fail("duration", "must be > 0");
    if (sc.packet_size == 0) return fail("packet_size", "must be > 0");
    if (sc.queue_capacity && *sc.queue_capacity == 0)
        return fail("queue.capacity", "must be > 0");

    if (const auto* c = std::get_if<ArrivalConstant>(&sc.arrival)) {
        if (c->rate == 0) return fail("arrival.rate", "must be > 0");
    } else if (const auto* b = std::get_if<ArrivalBurst>(&sc.arrival)) {
        if (b->rate_high == 0 || b->rate_low == 0)
            return fail("arrival.burst.high", "rates must be > 0");
        if (b->period <= 0) return fail("arrival.burst.period", "must be > 0");
        if (b->duty < 0.0 || b->duty > 1.0) return fail("arrival.burst.duty", "must be in [0, 1]");
    } else if (const auto* o = std::get_if<ArrivalOnOff>(&sc.arrival)) {
        if (o->rate == 0) return fail("arrival.rate", "must be > 0");
        if (o->on_ns <= 0) return fail("arrival.onoff.on", "must be > 0");
        if (o->off_ns < 0) return fail("arrival.onoff.off", "must be >= 0");
    } else if (const auto* p = std::get_if<ArrivalPoisson>(&sc.arrival)) {
        if (p->mean_rate == 0) return fail("arrival.rate", "must be > 0");
    }

    if (const auto* c = std::get_if<DrainConstant>(&sc.drain)) {
        if (c->rate == 0) return fail("drain.rate", "must be > 0");
    } else if (const auto* s = std::get_if<DrainStep>(&sc.drain)) {
        if (s->rate_before == 0 || s->rate_after == 0)
            return fail("drain.rate", "rates must be > 0");
        if (s->t_step < 0) return fail("drain.step.t", "must be >= 0");
    } else if (const auto* f = std::get_if<DrainFitsStarts>(&sc.drain)) {
        if (f->rate == 0) return fail("drain.rate", "must be > 0");
        if (f->stall_period <= 0) return fail("drain.stall.period", "must be > 0");
        if (f->stall_len < 0 || f->stall_len >= f->stall_period)
            return fail("drain.stall.len", "must be in [0, stall_period)");
    } else if (const auto* w = std::get_if<DrainRandomWalk>(&sc.drain)) {
        if (w->mean_rate == 0) return fail("drain.rate", "must be > 0");
        if (w->step_pct <= 0.0 || w->step_pct >= 100.0)
            return fail("drain.walk.step_pct", "must be in (0, 100)");
        if (w->step_period <= 0) return fail("drain.walk.period", "must be > 0");
    }

    if (sc.aqm.pi_t_update <= 0) return fail("aqm.pi.t_update", "must be > 0");
    if (sc.aqm.ramp_min_th > sc.aqm.ramp_max_th)
        return fail("aqm.ramp.min_th", "must be <= aqm.ramp.max_th");
    if (sc.aqm.ramp_max_p < 0.0 || sc.aqm.ramp_max_p > 1.0)
        return fail("aqm.ramp.max_p", "must be in [0, 1]");
    return std::nullopt;
}

} // namespace

std::variant<Scenario, ConfigError> parse_scenario(const std::string& text) {
    struct Entry {
        int line;
        std::string key, value;
    };
    std::vector<Entry> entries;

    int lineno = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        std::string line = text.substr(pos, nl == std::string::npos ? std::string::npos : nl - pos);
        pos = nl == std::string::npos ? text.size() + 1 : nl + 1;
        ++lineno;

        if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;

        const auto eq = line.find('=');
        if (eq == std::string::npos)
            return ConfigError{lineno, line, "expected key = value"};
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) return ConfigError{lineno, "", "empty key"};
        if (value.empty()) return ConfigError{lineno, key, "empty value"};
        for (const auto& e : entries)
            if (e.key == key) return ConfigError{lineno, key, "duplicate key"};
        entries.push_back({lineno, key, value});
    }

    Scenario sc;
    // Selector keys first so field keys work regardless of file order.
    const auto is_selector = [](const std::string& k) {
        return k == "arrival.process" || k == "drain.process" || k == "aqm.algorithm";
    };
    for (const auto& e : entries) {
        if (!is_selector(e.key)) continue;
        if (auto err = apply_key(sc, e.key, e.value); !err.empty())
            return ConfigError{e.line, e.key, err};
    }
    for (const auto& e : entries) {
        if (is_selector(e.key)) continue;
        if (auto err = apply_key(sc, e.key, e.value); !err.empty())
            return ConfigError{e.line, e.key, err};
    }
    if (auto err = validate(sc)) return *err;
    return sc;
}

std::optional<ConfigError> apply_override(Scenario& sc, const std::string& pair) {
    const auto eq = pair.find('=');
    if (eq == std::string::npos)
        return ConfigError{0, pair, "expected key=value"};
    const std::string key = trim(pair.substr(0, eq));
    const std::string value = trim(pair.substr(eq + 1));
    if (key.empty() || value.empty())
        return ConfigError{0, key, "expected key=value"};
    Scenario tmp = sc; // leave the input untouched on failure
    if (auto err = apply_key(tmp, key, value); !err.empty())
        return ConfigError{0, key, err};
    if (auto err = validate(tmp)) return err;
    sc = tmp;
    return std::nullopt;
}

namespace {

std::string fmt_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

} // namespace

std::string render(const Scenario& sc) {
    std::string out;
    const auto kv = [&out](const std::string& k, const std::string& v) {
        out += k;
        out += " = ";
        out += v;
        out += '\n';
    };
    const auto ns = [](TimeNs t) { return std::to_string(t) + "ns"; };
    const auto bps = [](RateBps r) { return std::to_string(r) + "B/s"; };

    kv("duration", ns(sc.duration));
    kv("packet_size", std::to_string(sc.packet_size) + "B");
    kv("seed", std::to_string(sc.seed));
    kv("estimator", estimator_name(sc.estimator));
    kv("rate.min_window_packets", std::to_string(sc.min_window_packets));
    kv("report.threshold", ns(sc.report_threshold));
    if (sc.queue_capacity) kv("queue.capacity", std::to_string(*sc.queue_capacity) + "B");

    if (const auto* c = std::get_if<ArrivalConstant>(&sc.arrival)) {
        kv("arrival.process", "constant");
        kv("arrival.rate", bps(c->rate));
    } else if (const auto* b = std::get_if<ArrivalBurst>(&sc.arrival)) {
        kv("arrival.process", "burst");
        kv("arrival.burst.high", bps(b->rate_high));
        kv("arrival.burst.low", bps(b->rate_low));
        kv("arrival.burst.period", ns(b->period));
        kv("arrival.burst.duty", fmt_double(b->duty));
    } else if (const auto* o = std::get_if<ArrivalOnOff>(&sc.arrival)) {
        kv("arrival.process", "onoff");
        kv("arrival.rate", bps(o->rate));
        kv("arrival.onoff.on", ns(o->on_ns));
        kv("arrival.onoff.off", ns(o->off_ns));
    } else if (const auto* p = std::get_if<ArrivalPoisson>(&sc.arrival)) {
        kv("arrival.process", "poisson");
        kv("arrival.rate", bps(p->mean_rate));
        kv("arrival.poisson.seed", std::to_string(p->seed));
    }

    if (const auto* c = std::get_if<DrainConstant>(&sc.drain)) {
        kv("drain.process", "constant");
        kv("drain.rate", bps(c->rate));
    } else if (const auto* s = std::get_if<DrainStep>(&sc.drain)) {
        kv("drain.process", "step");
        kv("drain.rate", bps(s->rate_before));
        kv("drain.step.rate_after", bps(s->rate_after));
        kv("drain.step.t", ns(s->t_step));
    } else if (const auto* f = std::get_if<DrainFitsStarts>(&sc.drain)) {
        kv("drain.process", "fits_starts");
        kv("drain.rate", bps(f->rate));
        kv("drain.stall.period", ns(f->stall_period));
        kv("drain.stall.len", ns(f->stall_len));
    } else if (const auto* w = std::get_if<DrainRandomWalk>(&sc.drain)) {
        kv("drain.process", "random_walk");
        kv("drain.rate", bps(w->mean_rate));
        kv("drain.walk.step_pct", fmt_double(w->step_pct));
        kv("drain.walk.period", ns(w->step_period));
        kv("drain.walk.seed", std::to_string(w->seed));
    }

    const char* algo = "none";
    switch (sc.aqm.algorithm) {
        case AqmAlgorithm::None: algo = "none"; break;
        case AqmAlgorithm::Pi: algo = "pi"; break;
        case AqmAlgorithm::Codel: algo = "codel"; break;
        case AqmAlgorithm::Ramp: algo = "ramp"; break;
    }
    kv("aqm.algorithm", algo);
    kv("aqm.point", sc.aqm.point == ApplicationPoint::Enqueue ? "enqueue" : "dequeue");
    kv("aqm.signal", sc.aqm.signal == Signal::Drop ? "drop" : "mark");
    kv("aqm.marker",
       sc.aqm.marker == MarkerMode::DeterministicInterval ? "deterministic" : "random");
    kv("aqm.pi.target", ns(sc.aqm.pi_target));
    kv("aqm.pi.alpha", fmt_double(sc.aqm.pi_alpha));
    kv("aqm.pi.beta", fmt_double(sc.aqm.pi_beta));
    kv("aqm.pi.t_update", ns(sc.aqm.pi_t_update));
    kv("aqm.pi.burst_heuristic", sc.aqm.pi_burst_heuristic ? "on" : "off");
    kv("aqm.codel.target", ns(sc.aqm.codel_target));
    kv("aqm.codel.interval", ns(sc.aqm.codel_interval));
    kv("aqm.ramp.min_th", ns(sc.aqm.ramp_min_th));
    kv("aqm.ramp.max_th", ns(sc.aqm.ramp_max_th));
    kv("aqm.ramp.max_p", fmt_double(sc.aqm.ramp_max_p));
    return out;
}

} // namespace aqmsim
