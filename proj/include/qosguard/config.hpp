#pragma once

// Experiment description and its text format.
//
// The format is INI-like: `[section]` headers, `key = value` lines, and `#` or
// `;` comments. Lists are comma separated. Unknown sections and keys are
// rejected. Every key has a default except the traffic description.
//
//   [system]      channels, guard, mean_holding_time | service_rate, window
//   [traffic]     rates | ratio + total_rate | total_rate_range,
//                 sweep_class + sweep_values | sweep_range, names
//   [simulation]  arrivals, warmup, policy, estimator, replications,
//                 trace_every, batches, events
//   [vlc]         half_power_angle, detector_area, distance, irradiance_angle,
//                 incidence_angle, fov, filter_gain, refractive_index,
//                 transmit_power
//   [experiment]  mode, seed

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "des_engine.hpp"
#include "errors.hpp"
#include "guard_allocator.hpp"
#include "traffic_model.hpp"
#include "vlc_phy.hpp"

namespace qosguard {

enum class Mode { analyze, simulate, compare, sweep, vlc_link };

inline const char* to_string(Mode m) {
    switch (m) {
        case Mode::analyze: return "analyze";
        case Mode::simulate: return "simulate";
        case Mode::compare: return "compare";
        case Mode::sweep: return "sweep";
        case Mode::vlc_link: return "vlc-link";
    }
    return "?";
}

inline std::optional<Mode> parse_mode(std::string_view s) {
    for (Mode m : {Mode::analyze, Mode::simulate, Mode::compare, Mode::sweep, Mode::vlc_link})
        if (s == to_string(m)) return m;
    return std::nullopt;
}

/// One or more traffic profiles. Exactly one form is used:
///  - `rates` alone: a single point;
///  - `rates` + `sweep_class` + `sweep_values`: one class swept, others fixed;
///  - `ratio` + `total_rates`: the ratio scaled to each total.
struct TrafficSpec {
    std::vector<double> rates;
    std::vector<double> ratio;
    std::vector<double> total_rates;
    std::size_t sweep_class = 0;  // 1-based, 0 when unused
    std::vector<double> sweep_values;
    std::vector<std::string> names;

    bool empty() const { return rates.empty() && ratio.empty(); }

    std::vector<TrafficProfile> points() const {
        std::vector<TrafficProfile> out;
        if (!ratio.empty()) {
            double weight = 0.0;
            for (double r : ratio) weight += r;
            for (double total : total_rates) {
                std::vector<double> r;
                for (double w : ratio) r.push_back(total * w / weight);
                out.emplace_back(std::move(r), names);
            }
        } else if (sweep_class > 0) {
            for (double v : sweep_values) {
                auto r = rates;
                r.at(sweep_class - 1) = v;
                out.emplace_back(std::move(r), names);
            }
        } else if (!rates.empty()) {
            out.emplace_back(rates, names);
        }
        return out;
    }

    friend bool operator==(const TrafficSpec&, const TrafficSpec&) = default;
};

struct SimulationSpec {
    std::uint64_t arrivals = 1'000'000;
    double warmup = 0.1;
    Policy policy = Policy::dynamic_reservation;
    RateSource estimator = RateSource::online_estimate;
    std::size_t replications = 1;
    std::size_t trace_every = 1000;
    std::size_t batches = 20;
    bool events = false;

    friend bool operator==(const SimulationSpec&, const SimulationSpec&) = default;
};

struct VlcSpec {
    vlc::OpticalLinkParams link;
    std::vector<double> distances{2.0};
    std::vector<double> incidence_angles{0.0};
    double transmit_power = 1.0;

    friend bool operator==(const VlcSpec& a, const VlcSpec& b) {
        const auto& x = a.link;
        const auto& y = b.link;
        return x.half_power_angle_deg == y.half_power_angle_deg && x.detector_area_m2 == y.detector_area_m2 &&
               x.irradiance_angle_deg == y.irradiance_angle_deg && x.fov_deg == y.fov_deg &&
               x.filter_gain == y.filter_gain && x.refractive_index == y.refractive_index &&
               a.distances == b.distances && a.incidence_angles == b.incidence_angles &&
               a.transmit_power == b.transmit_power;
    }
};

struct ExperimentSpec {
    Mode mode = Mode::analyze;
    SystemConfig system;
    TrafficSpec traffic;
    SimulationSpec simulation;
    VlcSpec vlc;
    std::uint64_t seed = 1;
    std::vector<std::string> warnings;  // not part of equality

    friend bool operator==(const ExperimentSpec& a, const ExperimentSpec& b) {
        return a.mode == b.mode && a.system.channels == b.system.channels && a.system.guard == b.system.guard &&
               a.system.service_rate == b.system.service_rate && a.system.window == b.system.window &&
               a.traffic == b.traffic && a.simulation == b.simulation && a.vlc == b.vlc && a.seed == b.seed;
    }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    for (;;) {
        const auto pos = s.find(sep, start);
        parts.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return parts;
}

struct Entry {
    std::string value;
    int line = 0;
};

class ConfigReader {
public:
    using Section = std::map<std::string, Entry, std::less<>>;

    explicit ConfigReader(std::string_view text) {
        static const std::map<std::string, std::vector<std::string>, std::less<>> known{
            {"system", {"channels", "guard", "mean_holding_time", "service_rate", "window"}},
            {"traffic",
             {"rates", "ratio", "total_rate", "total_rate_range", "sweep_class", "sweep_values", "sweep_range",
              "names"}},
            {"simulation",
             {"arrivals", "warmup", "policy", "estimator", "replications", "trace_every", "batches", "events"}},
            {"vlc",
             {"half_power_angle", "detector_area", "distance", "irradiance_angle", "incidence_angle", "fov",
              "filter_gain", "refractive_index", "transmit_power"}},
            {"experiment", {"mode", "seed"}},
        };

        std::string section;
        int line_no = 0;
        std::istringstream in{std::string(text)};
        for (std::string raw; std::getline(in, raw);) {
            ++line_no;
            std::string_view line = raw;
            if (const auto c = line.find_first_of("#;"); c != std::string_view::npos) line = line.substr(0, c);
            line = trim(line);
            if (line.empty()) continue;
            if (line.front() == '[') {
                if (line.back() != ']') throw ConfigError("", line_no, "malformed section header");
                section = std::string(trim(line.substr(1, line.size() - 2)));
                if (!known.contains(section)) throw ConfigError(section, line_no, "unknown section");
                continue;
            }
            const auto eq = line.find('=');
            if (eq == std::string_view::npos) throw ConfigError("", line_no, "expected 'key = value'");
            const std::string key(trim(line.substr(0, eq)));
            const std::string path = section.empty() ? key : section + "." + key;
            if (section.empty()) throw ConfigError(path, line_no, "key outside of a section");
            const auto& keys = known.at(section);
            if (std::find(keys.begin(), keys.end(), key) == keys.end())
                throw ConfigError(path, line_no, "unknown key");
            auto& sec = sections_[section];
            if (sec.contains(key)) throw ConfigError(path, line_no, "duplicate key");
            sec[key] = Entry{std::string(trim(line.substr(eq + 1))), line_no};
        }
    }

    const Entry* find(std::string_view section, std::string_view key) const {
        const auto s = sections_.find(section);
        if (s == sections_.end()) return nullptr;
        const auto k = s->second.find(key);
        return k == s->second.end() ? nullptr : &k->second;
    }

private:
    std::map<std::string, Section, std::less<>> sections_;
};

inline double to_double(std::string_view s, const std::string& path, int line) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v))
        throw ConfigError(path, line, "expected a number, got '" + std::string(s) + "'");
    return v;
}

inline long long to_integer(std::string_view s, const std::string& path, int line) {
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw ConfigError(path, line, "expected an integer, got '" + std::string(s) + "'");
    return v;
}

class Fields {
public:
    explicit Fields(const ConfigReader& r) : reader_(r) {}

    const Entry* get(std::string_view section, std::string_view key) const { return reader_.find(section, key); }

    static std::string path(std::string_view section, std::string_view key) {
        return std::string(section) + "." + std::string(key);
    }

    template <class F>
    void number(std::string_view section, std::string_view key, F&& assign) const {
        if (const auto* e = get(section, key)) assign(to_double(e->value, path(section, key), e->line), e->line);
    }

    template <class F>
    void integer(std::string_view section, std::string_view key, F&& assign) const {
        if (const auto* e = get(section, key)) assign(to_integer(e->value, path(section, key), e->line), e->line);
    }

    std::optional<std::vector<double>> list(std::string_view section, std::string_view key, char sep = ',') const {
        const auto* e = get(section, key);
        if (!e) return std::nullopt;
        std::vector<double> out;
        for (auto part : split(e->value, sep)) out.push_back(to_double(part, path(section, key), e->line));
        return out;
    }

    int line(std::string_view section, std::string_view key) const {
        const auto* e = get(section, key);
        return e ? e->line : 0;
    }

private:
    const ConfigReader& reader_;
};

inline std::vector<double> expand_range(const std::vector<double>& r, const std::string& path, int line) {
    if (r.size() != 3) throw ConfigError(path, line, "range needs start, stop, step");
    const double start = r[0], stop = r[1], step = r[2];
    if (!(step > 0.0) || stop < start) throw ConfigError(path, line, "range needs step > 0 and stop >= start");
    std::vector<double> out;
    for (long k = 0;; ++k) {
        const double v = start + static_cast<double>(k) * step;
        if (v > stop + 1e-9 * step) break;
        out.push_back(v);
        if (out.size() > 1'000'000) throw ConfigError(path, line, "range is too long");
    }
    return out;
}

}  // namespace detail

/// Checks cross-field constraints; mode-specific requirements included.
inline void validate(const ExperimentSpec& spec) {
    const auto& s = spec.system;
    if (s.channels < 1) throw ConfigError("system.channels", 0, "must be positive");
    if (s.guard < 0) throw ConfigError("system.guard", 0, "must be non-negative");
    if (s.guard > s.channels) throw ConfigError("system.guard", 0, "must not exceed system.channels");
    if (!(s.service_rate > 0.0)) throw ConfigError("system.service_rate", 0, "must be positive");
    if (s.window < 1) throw ConfigError("system.window", 0, "must be at least 1");

    const auto& t = spec.traffic;
    if (spec.mode != Mode::vlc_link && t.empty())
        throw ConfigError("traffic.rates", 0, "a traffic description is required");
    if (!t.rates.empty() && !t.ratio.empty())
        throw ConfigError("traffic.ratio", 0, "use either rates or ratio, not both");
    for (double r : t.rates)
        if (r < 0.0) throw ConfigError("traffic.rates", 0, "rates must be non-negative");
    for (double r : t.ratio)
        if (r < 0.0) throw ConfigError("traffic.ratio", 0, "ratio weights must be non-negative");
    if (!t.ratio.empty()) {
        double w = 0.0;
        for (double r : t.ratio) w += r;
        if (!(w > 0.0)) throw ConfigError("traffic.ratio", 0, "ratio weights must not all be zero");
        if (t.total_rates.empty()) throw ConfigError("traffic.total_rate", 0, "required with traffic.ratio");
        for (double r : t.total_rates)
            if (r < 0.0) throw ConfigError("traffic.total_rate", 0, "must be non-negative");
    } else if (!t.total_rates.empty()) {
        throw ConfigError("traffic.total_rate", 0, "requires traffic.ratio");
    }
    if (t.sweep_class > 0) {
        if (t.rates.empty()) throw ConfigError("traffic.sweep_class", 0, "requires traffic.rates");
        if (t.sweep_class > t.rates.size()) throw ConfigError("traffic.sweep_class", 0, "class index out of range");
        if (t.sweep_values.empty()) throw ConfigError("traffic.sweep_values", 0, "required with traffic.sweep_class");
        for (double v : t.sweep_values)
            if (v < 0.0) throw ConfigError("traffic.sweep_values", 0, "must be non-negative");
    } else if (!t.sweep_values.empty()) {
        throw ConfigError("traffic.sweep_values", 0, "requires traffic.sweep_class");
    }
    const std::size_t classes = !t.rates.empty() ? t.rates.size() : t.ratio.size();
    if (!t.names.empty() && t.names.size() != classes)
        throw ConfigError("traffic.names", 0, "needs one name per class");

    const auto points = t.points();
    for (std::size_t i = 1; i < points.size(); ++i)
        if (!(points[i].total_rate() > points[i - 1].total_rate()))
            throw ConfigError(!t.ratio.empty() ? "traffic.total_rate" : "traffic.sweep_values", 0,
                              "sweep grid must be strictly increasing in total rate");

    const auto& sim = spec.simulation;
    if (sim.arrivals < 1) throw ConfigError("simulation.arrivals", 0, "must be positive");
    if (!(sim.warmup >= 0.0 && sim.warmup < 1.0)) throw ConfigError("simulation.warmup", 0, "must lie in [0, 1)");
    if (sim.replications < 1) throw ConfigError("simulation.replications", 0, "must be at least 1");
    if (sim.batches < 2) throw ConfigError("simulation.batches", 0, "must be at least 2");

    try {
        spec.vlc.link.validate();
    } catch (const std::domain_error& e) {
        throw ConfigError("vlc", 0, e.what());
    }
    for (double d : spec.vlc.distances)
        if (!(d > 0.0)) throw ConfigError("vlc.distance", 0, "must be positive");
    if (spec.vlc.distances.empty()) throw ConfigError("vlc.distance", 0, "needs at least one value");
    if (spec.vlc.incidence_angles.empty()) throw ConfigError("vlc.incidence_angle", 0, "needs at least one value");
    if (!(spec.vlc.transmit_power >= 0.0)) throw ConfigError("vlc.transmit_power", 0, "must be non-negative");
}

/// Parses and validates. Unset keys keep their defaults: 100 channels, a
/// guard pool of 10, 120 s mean holding time and a 100-gap estimator window.
inline ExperimentSpec parse_config(std::string_view text) {
    const detail::ConfigReader reader(text);
    const detail::Fields f(reader);
    ExperimentSpec spec;

    if (const auto* e = f.get("experiment", "mode")) {
        const auto m = parse_mode(e->value);
        if (!m) throw ConfigError("experiment.mode", e->line, "unknown mode '" + e->value + "'");
        spec.mode = *m;
    }
    f.integer("experiment", "seed", [&](long long v, int line) {
        if (v < 0) throw ConfigError("experiment.seed", line, "must be non-negative");
        spec.seed = static_cast<std::uint64_t>(v);
    });

    f.integer("system", "channels", [&](long long v, int line) {
        if (v < 1 || v > 100000) throw ConfigError("system.channels", line, "must lie in [1, 100000]");
        spec.system.channels = static_cast<int>(v);
    });
    f.integer("system", "guard", [&](long long v, int line) {
        if (v < 0 || v > 100000) throw ConfigError("system.guard", line, "must lie in [0, 100000]");
        spec.system.guard = static_cast<int>(v);
    });
    if (f.get("system", "mean_holding_time") && f.get("system", "service_rate"))
        throw ConfigError("system.service_rate", f.line("system", "service_rate"),
                          "give either mean_holding_time or service_rate");
    f.number("system", "mean_holding_time", [&](double v, int line) {
        if (!(v > 0.0)) throw ConfigError("system.mean_holding_time", line, "must be positive");
        spec.system.service_rate = 1.0 / v;
    });
    f.number("system", "service_rate", [&](double v, int line) {
        if (!(v > 0.0)) throw ConfigError("system.service_rate", line, "must be positive");
        spec.system.service_rate = v;
    });
    f.integer("system", "window", [&](long long v, int line) {
        if (v < 1) throw ConfigError("system.window", line, "must be at least 1");
        spec.system.window = static_cast<std::size_t>(v);
    });

    auto& t = spec.traffic;
    auto non_negative = [&](const std::vector<double>& xs, const char* key) {
        for (double x : xs)
            if (x < 0.0) throw ConfigError(std::string("traffic.") + key, f.line("traffic", key), "values must be non-negative");
    };
    if (auto v = f.list("traffic", "rates")) non_negative(t.rates = *v, "rates");
    if (const auto* e = f.get("traffic", "ratio")) {
        const char sep = e->value.find(':') != std::string::npos ? ':' : ',';
        non_negative(t.ratio = *f.list("traffic", "ratio", sep), "ratio");
    }
    if (f.get("traffic", "total_rate") && f.get("traffic", "total_rate_range"))
        throw ConfigError("traffic.total_rate_range", f.line("traffic", "total_rate_range"),
                          "give either total_rate or total_rate_range");
    if (auto v = f.list("traffic", "total_rate")) non_negative(t.total_rates = *v, "total_rate");
    if (auto v = f.list("traffic", "total_rate_range"))
        t.total_rates = detail::expand_range(*v, "traffic.total_rate_range", f.line("traffic", "total_rate_range"));
    f.integer("traffic", "sweep_class", [&](long long v, int line) {
        if (v < 1) throw ConfigError("traffic.sweep_class", line, "class indices start at 1");
        t.sweep_class = static_cast<std::size_t>(v);
    });
    if (f.get("traffic", "sweep_values") && f.get("traffic", "sweep_range"))
        throw ConfigError("traffic.sweep_range", f.line("traffic", "sweep_range"),
                          "give either sweep_values or sweep_range");
    if (auto v = f.list("traffic", "sweep_values")) non_negative(t.sweep_values = *v, "sweep_values");
    if (auto v = f.list("traffic", "sweep_range"))
        t.sweep_values = detail::expand_range(*v, "traffic.sweep_range", f.line("traffic", "sweep_range"));
    if (const auto* e = f.get("traffic", "names"))
        for (auto part : detail::split(e->value, ',')) t.names.emplace_back(part);

    auto& sim = spec.simulation;
    f.integer("simulation", "arrivals", [&](long long v, int line) {
        if (v < 1) throw ConfigError("simulation.arrivals", line, "must be positive");
        sim.arrivals = static_cast<std::uint64_t>(v);
    });
    f.number("simulation", "warmup", [&](double v, int line) {
        if (!(v >= 0.0 && v < 1.0)) throw ConfigError("simulation.warmup", line, "must lie in [0, 1)");
        sim.warmup = v;
    });
    if (const auto* e = f.get("simulation", "policy")) {
        if (e->value == "dynamic") sim.policy = Policy::dynamic_reservation;
        else if (e->value == "sharing") sim.policy = Policy::complete_sharing;
        else throw ConfigError("simulation.policy", e->line, "expected 'dynamic' or 'sharing'");
    }
    if (const auto* e = f.get("simulation", "estimator")) {
        if (e->value == "online") sim.estimator = RateSource::online_estimate;
        else if (e->value == "true") sim.estimator = RateSource::true_rates;
        else throw ConfigError("simulation.estimator", e->line, "expected 'online' or 'true'");
    }
    f.integer("simulation", "replications", [&](long long v, int line) {
        if (v < 1) throw ConfigError("simulation.replications", line, "must be at least 1");
        sim.replications = static_cast<std::size_t>(v);
    });
    f.integer("simulation", "trace_every", [&](long long v, int line) {
        if (v < 0) throw ConfigError("simulation.trace_every", line, "must be non-negative");
        sim.trace_every = static_cast<std::size_t>(v);
    });
    f.integer("simulation", "batches", [&](long long v, int line) {
        if (v < 2) throw ConfigError("simulation.batches", line, "must be at least 2");
        sim.batches = static_cast<std::size_t>(v);
    });
    if (const auto* e = f.get("simulation", "events")) {
        if (e->value == "true") sim.events = true;
        else if (e->value == "false") sim.events = false;
        else throw ConfigError("simulation.events", e->line, "expected 'true' or 'false'");
    }

    auto& v = spec.vlc;
    f.number("vlc", "half_power_angle", [&](double x, int) { v.link.half_power_angle_deg = x; });
    f.number("vlc", "detector_area", [&](double x, int) { v.link.detector_area_m2 = x; });
    f.number("vlc", "irradiance_angle", [&](double x, int) { v.link.irradiance_angle_deg = x; });
    f.number("vlc", "fov", [&](double x, int) { v.link.fov_deg = x; });
    f.number("vlc", "filter_gain", [&](double x, int) { v.link.filter_gain = x; });
    f.number("vlc", "refractive_index", [&](double x, int) { v.link.refractive_index = x; });
    f.number("vlc", "transmit_power", [&](double x, int) { v.transmit_power = x; });
    if (auto d = f.list("vlc", "distance")) v.distances = *d;
    if (auto a = f.list("vlc", "incidence_angle")) v.incidence_angles = *a;
    v.link.distance_m = v.distances.front();
    v.link.incidence_angle_deg = v.incidence_angles.front();

    if (spec.system.guard > spec.system.channels)
        throw ConfigError("system.guard", f.line("system", "guard"), "must not exceed system.channels");
    if (2 * spec.system.guard > spec.system.channels)
        spec.warnings.push_back("system.guard exceeds half of system.channels");
    validate(spec);
    return spec;
}

namespace detail {

inline std::string exact(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline std::string join_exact(const std::vector<double>& xs) {
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? ", " : "") + exact(xs[i]);
    return out;
}

}  // namespace detail

/// Fully resolved spec in the config format; parse_config reads it back to an
/// equal spec.
inline std::string format_config(const ExperimentSpec& spec) {
    using detail::exact;
    using detail::join_exact;
    std::ostringstream o;
    o << "[experiment]\nmode = " << to_string(spec.mode) << "\nseed = " << spec.seed << "\n\n";
    o << "[system]\nchannels = " << spec.system.channels << "\nguard = " << spec.system.guard
      << "\nservice_rate = " << exact(spec.system.service_rate) << "\nwindow = " << spec.system.window << "\n\n";

    const auto& t = spec.traffic;
    if (!t.empty()) {
        o << "[traffic]\n";
        if (!t.rates.empty()) o << "rates = " << join_exact(t.rates) << "\n";
        if (!t.ratio.empty()) o << "ratio = " << join_exact(t.ratio) << "\n";
        if (!t.total_rates.empty()) o << "total_rate = " << join_exact(t.total_rates) << "\n";
        if (t.sweep_class > 0)
            o << "sweep_class = " << t.sweep_class << "\nsweep_values = " << join_exact(t.sweep_values) << "\n";
        if (!t.names.empty()) {
            o << "names = ";
            for (std::size_t i = 0; i < t.names.size(); ++i) o << (i ? ", " : "") << t.names[i];
            o << "\n";
        }
        o << "\n";
    }

    const auto& s = spec.simulation;
    o << "[simulation]\narrivals = " << s.arrivals << "\nwarmup = " << exact(s.warmup)
      << "\npolicy = " << to_string(s.policy) << "\nestimator = " << to_string(s.estimator)
      << "\nreplications = " << s.replications << "\ntrace_every = " << s.trace_every
      << "\nbatches = " << s.batches << "\nevents = " << (s.events ? "true" : "false") << "\n\n";

    const auto& v = spec.vlc;
    o << "[vlc]\nhalf_power_angle = " << exact(v.link.half_power_angle_deg)
      << "\ndetector_area = " << exact(v.link.detector_area_m2) << "\ndistance = " << join_exact(v.distances)
      << "\nirradiance_angle = " << exact(v.link.irradiance_angle_deg)
      << "\nincidence_angle = " << join_exact(v.incidence_angles) << "\nfov = " << exact(v.link.fov_deg)
      << "\nfilter_gain = " << exact(v.link.filter_gain) << "\nrefractive_index = " << exact(v.link.refractive_index)
      << "\ntransmit_power = " << exact(v.transmit_power) << "\n";
    return o.str();
}

}  // namespace qosguard
