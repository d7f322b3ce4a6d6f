#pragma once

// Flat `key = value` scenario configuration: parser, validation, canonical
// serialization (manifests), and the key registry shared with the sweep
// machinery. SI units throughout; `#` starts a comment; unknown keys are
// rejected with the offending line number.

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "photomol/csv.hpp"
#include "photomol/envelope.hpp"
#include "photomol/errors.hpp"
#include "photomol/grid.hpp"
#include "photomol/params.hpp"
#include "photomol/version.hpp"

namespace photomol {

struct InputPulseSpec {
    std::string shape = "gaussian";  // gaussian | sech
    double center = 0.0;             // m
    double width = 1.0e-3;           // m
    double amplitude = 0.0;          // dimensionless envelope peak

    void validate() const {
        if (shape != "gaussian" && shape != "sech")
            throw config_error("input_shape must be 'gaussian' or 'sech'");
        if (!(width > 0.0)) throw config_error("input_width must be > 0");
        if (!(amplitude >= 0.0) || !std::isfinite(amplitude))
            throw config_error("input_amplitude must be finite and >= 0");
    }

    Envelope make() const {
        validate();
        return shape == "gaussian" ? gaussian_pulse(center, width, amplitude)
                                   : sech_pulse(center, width, amplitude);
    }
};

struct SweepAxis {
    std::string key;
    double start = 0.0;
    double stop = 0.0;
    int count = 0;
    std::string scale = "linear";  // linear | log

    bool active() const { return !key.empty(); }
};

struct ScenarioConfig {
    PhysicalParams params;
    PulseSchedule schedule;
    Grid1D grid;
    double t_end = 0.0;  // alternative to n_t: total simulated time [s]
    InitState init = InitState::ground;
    InputPulseSpec input;
    double alpha = 0.0;  // coherent input amplitude |alpha| (photon number = alpha^2)
    int snapshot_stride = 0;
    std::string out_dir = "out";
    double hold_duration = 0.0;  // optional second time segment [s]
    double hold_dt = 0.0;        // its step; defaults to the main dt
    double compare_max_error = 0.01;
    int analytic_samples = 2048;
    SweepAxis sweep, sweep2;
};

namespace detail {

struct DoubleKey {
    const char* name;
    std::function<double&(ScenarioConfig&)> ref;
};
struct IntKey {
    const char* name;
    std::function<void(ScenarioConfig&, long long)> set;
    std::function<long long(const ScenarioConfig&)> get;
};
struct StringKey {
    const char* name;
    std::function<void(ScenarioConfig&, const std::string&)> set;
    std::function<std::string(const ScenarioConfig&)> get;
};

inline const std::vector<DoubleKey>& double_keys() {
    static const std::vector<DoubleKey> keys = {
        {"g_tilde", [](ScenarioConfig& c) -> double& { return c.params.g_tilde; }},
        {"n_atoms", [](ScenarioConfig& c) -> double& { return c.params.n_atoms; }},
        {"length", [](ScenarioConfig& c) -> double& { return c.params.length; }},
        {"c_light", [](ScenarioConfig& c) -> double& { return c.params.c_light; }},
        {"delta", [](ScenarioConfig& c) -> double& { return c.params.delta; }},
        {"Delta", [](ScenarioConfig& c) -> double& { return c.params.Delta; }},
        {"gamma_b", [](ScenarioConfig& c) -> double& { return c.params.gamma_b; }},
        {"gamma_e", [](ScenarioConfig& c) -> double& { return c.params.gamma_e; }},
        {"gamma_c", [](ScenarioConfig& c) -> double& { return c.params.gamma_c; }},
        {"omega0", [](ScenarioConfig& c) -> double& { return c.schedule.omega0; }},
        {"t_switch", [](ScenarioConfig& c) -> double& { return c.schedule.t_switch; }},
        {"tau_switch", [](ScenarioConfig& c) -> double& { return c.schedule.tau_switch; }},
        {"t_reswitch", [](ScenarioConfig& c) -> double& { return c.schedule.t_reswitch; }},
        {"z_min", [](ScenarioConfig& c) -> double& { return c.grid.z_min; }},
        {"z_max", [](ScenarioConfig& c) -> double& { return c.grid.z_max; }},
        {"dt", [](ScenarioConfig& c) -> double& { return c.grid.dt; }},
        {"t_end", [](ScenarioConfig& c) -> double& { return c.t_end; }},
        {"input_center", [](ScenarioConfig& c) -> double& { return c.input.center; }},
        {"input_width", [](ScenarioConfig& c) -> double& { return c.input.width; }},
        {"input_amplitude", [](ScenarioConfig& c) -> double& { return c.input.amplitude; }},
        {"alpha", [](ScenarioConfig& c) -> double& { return c.alpha; }},
        {"hold_duration", [](ScenarioConfig& c) -> double& { return c.hold_duration; }},
        {"hold_dt", [](ScenarioConfig& c) -> double& { return c.hold_dt; }},
        {"compare_max_error",
         [](ScenarioConfig& c) -> double& { return c.compare_max_error; }},
        {"sweep_start", [](ScenarioConfig& c) -> double& { return c.sweep.start; }},
        {"sweep_stop", [](ScenarioConfig& c) -> double& { return c.sweep.stop; }},
        {"sweep2_start", [](ScenarioConfig& c) -> double& { return c.sweep2.start; }},
        {"sweep2_stop", [](ScenarioConfig& c) -> double& { return c.sweep2.stop; }},
    };
    return keys;
}

inline const std::vector<IntKey>& int_keys() {
    static const std::vector<IntKey> keys = {
        {"n_z", [](ScenarioConfig& c, long long v) { c.grid.n_z = static_cast<int>(v); },
         [](const ScenarioConfig& c) -> long long { return c.grid.n_z; }},
        {"n_t", [](ScenarioConfig& c, long long v) { c.grid.n_t = static_cast<long>(v); },
         [](const ScenarioConfig& c) -> long long { return c.grid.n_t; }},
        {"snapshot_stride",
         [](ScenarioConfig& c, long long v) { c.snapshot_stride = static_cast<int>(v); },
         [](const ScenarioConfig& c) -> long long { return c.snapshot_stride; }},
        {"analytic_samples",
         [](ScenarioConfig& c, long long v) { c.analytic_samples = static_cast<int>(v); },
         [](const ScenarioConfig& c) -> long long { return c.analytic_samples; }},
        {"sweep_count",
         [](ScenarioConfig& c, long long v) { c.sweep.count = static_cast<int>(v); },
         [](const ScenarioConfig& c) -> long long { return c.sweep.count; }},
        {"sweep2_count",
         [](ScenarioConfig& c, long long v) { c.sweep2.count = static_cast<int>(v); },
         [](const ScenarioConfig& c) -> long long { return c.sweep2.count; }},
    };
    return keys;
}

inline PulseShape parse_pulse_shape(const std::string& v) {
    if (v == "constant") return PulseShape::constant;
    if (v == "tanh-off") return PulseShape::tanh_off;
    if (v == "tanh-on") return PulseShape::tanh_on;
    if (v == "off-then-on") return PulseShape::off_then_on;
    if (v == "piecewise-linear") return PulseShape::piecewise_linear;
    throw config_error("pulse_shape must be one of constant, tanh-off, tanh-on, "
                       "off-then-on, piecewise-linear");
}

inline Frame parse_frame(const std::string& v) {
    if (v == "retarded") return Frame::retarded;
    if (v == "lab") return Frame::lab;
    throw config_error("frame must be 'retarded' or 'lab'");
}

inline InitState parse_init(const std::string& v) {
    if (v == "ground") return InitState::ground;
    if (v == "polariton") return InitState::polariton;
    throw config_error("init must be 'ground' or 'polariton'");
}

inline std::string to_string(InitState s) {
    return s == InitState::ground ? "ground" : "polariton";
}

inline const std::vector<StringKey>& string_keys() {
    static const std::vector<StringKey> keys = {
        {"pulse_shape",
         [](ScenarioConfig& c, const std::string& v) { c.schedule.shape = parse_pulse_shape(v); },
         [](const ScenarioConfig& c) { return to_string(c.schedule.shape); }},
        {"frame",
         [](ScenarioConfig& c, const std::string& v) { c.grid.frame = parse_frame(v); },
         [](const ScenarioConfig& c) { return to_string(c.grid.frame); }},
        {"init", [](ScenarioConfig& c, const std::string& v) { c.init = parse_init(v); },
         [](const ScenarioConfig& c) { return to_string(c.init); }},
        {"input_shape",
         [](ScenarioConfig& c, const std::string& v) {
             if (v != "gaussian" && v != "sech")
                 throw config_error("input_shape must be 'gaussian' or 'sech'");
             c.input.shape = v;
         },
         [](const ScenarioConfig& c) { return c.input.shape; }},
        {"out_dir", [](ScenarioConfig& c, const std::string& v) { c.out_dir = v; },
         [](const ScenarioConfig& c) { return c.out_dir; }},
        {"sweep_key", [](ScenarioConfig& c, const std::string& v) { c.sweep.key = v; },
         [](const ScenarioConfig& c) { return c.sweep.key; }},
        {"sweep_scale",
         [](ScenarioConfig& c, const std::string& v) {
             if (v != "linear" && v != "log")
                 throw config_error("sweep_scale must be 'linear' or 'log'");
             c.sweep.scale = v;
         },
         [](const ScenarioConfig& c) { return c.sweep.scale; }},
        {"sweep2_key", [](ScenarioConfig& c, const std::string& v) { c.sweep2.key = v; },
         [](const ScenarioConfig& c) { return c.sweep2.key; }},
        {"sweep2_scale",
         [](ScenarioConfig& c, const std::string& v) {
             if (v != "linear" && v != "log")
                 throw config_error("sweep2_scale must be 'linear' or 'log'");
             c.sweep2.scale = v;
         },
         [](const ScenarioConfig& c) { return c.sweep2.scale; }},
    };
    return keys;
}

inline std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace detail

// True when `key` can be targeted by a sweep (any scalar config entry).
inline bool is_numeric_key(const std::string& key) {
    for (const auto& k : detail::double_keys())
        if (key == k.name) return true;
    for (const auto& k : detail::int_keys())
        if (key == k.name) return true;
    return false;
}

inline void set_numeric_key(ScenarioConfig& cfg, const std::string& key, double value) {
    for (const auto& k : detail::double_keys()) {
        if (key == k.name) {
            k.ref(cfg) = value;
            return;
        }
    }
    for (const auto& k : detail::int_keys()) {
        if (key == k.name) {
            k.set(cfg, std::llround(value));
            return;
        }
    }
    throw config_error("'" + key + "' is not a numeric configuration key");
}

inline void apply_config_key(ScenarioConfig& cfg, const std::string& key,
                             const std::string& value, int line_no) {
    const std::string where = "line " + std::to_string(line_no);
    for (const auto& k : detail::double_keys()) {
        if (key == k.name) {
            k.ref(cfg) = parse_double(value, where + ", key '" + key + "'");
            return;
        }
    }
    for (const auto& k : detail::int_keys()) {
        if (key == k.name) {
            k.set(cfg, parse_int(value, where + ", key '" + key + "'"));
            return;
        }
    }
    for (const auto& k : detail::string_keys()) {
        if (key == k.name) {
            try {
                k.set(cfg, value);
            } catch (const config_error& e) {
                throw config_error(where + ": " + e.what());
            }
            return;
        }
    }
    throw config_error(where + ": unknown key '" + key + "'");
}

inline ScenarioConfig parse_config(std::istream& in) {
    ScenarioConfig cfg;
    std::set<std::string> seen;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string stripped = detail::trim(line);
        if (stripped.empty()) continue;
        const std::size_t eq = stripped.find('=');
        if (eq == std::string::npos)
            throw config_error("line " + std::to_string(line_no) +
                               ": expected 'key = value'");
        const std::string key = detail::trim(stripped.substr(0, eq));
        const std::string value = detail::trim(stripped.substr(eq + 1));
        if (key.empty())
            throw config_error("line " + std::to_string(line_no) + ": empty key");
        if (!seen.insert(key).second)
            throw config_error("line " + std::to_string(line_no) + ": duplicate key '" +
                               key + "'");
        apply_config_key(cfg, key, value, line_no);
    }
    return cfg;
}

inline ScenarioConfig parse_config_string(const std::string& text) {
    std::istringstream ss(text);
    return parse_config(ss);
}

inline ScenarioConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file '" + path + "'");
    return parse_config(in);
}

// Canonical full serialization; parsing it reproduces the config exactly
// (shortest-round-trip float formatting), which is what makes manifests
// re-runnable bit-identically.
inline std::string serialize_config(const ScenarioConfig& cfg) {
    std::ostringstream out;
    out << "# photomol " << version_string << " resolved configuration\n";
    if (const char* seed = std::getenv("PHOTOMOL_SEED"))
        out << "# PHOTOMOL_SEED=" << seed << "\n";
    ScenarioConfig mut = cfg;  // the double-key table hands out mutable references
    for (const auto& k : detail::double_keys())
        out << k.name << " = " << format_shortest(k.ref(mut)) << "\n";
    for (const auto& k : detail::int_keys())
        out << k.name << " = " << format_int(k.get(cfg)) << "\n";
    for (const auto& k : detail::string_keys()) {
        const std::string v = k.get(cfg);
        if (k.name == std::string("sweep_key") || k.name == std::string("sweep2_key")) {
            if (v.empty()) continue;  // inactive sweep axes stay absent
        }
        out << k.name << " = " << v << "\n";
    }
    return out.str();
}

// Cross-field validation used by every command before running.
inline void validate_scenario(const ScenarioConfig& cfg) {
    cfg.params.validate();
    cfg.schedule.validate();
    cfg.input.validate();
    cfg.grid.validate(cfg.params.c_light);
    if (cfg.t_end < 0.0 || !std::isfinite(cfg.t_end))
        throw config_error("t_end must be finite and >= 0");
    if (cfg.t_end > 0.0 && cfg.grid.n_t > 0)
        throw config_error("set either t_end or n_t, not both");
    if (cfg.hold_duration < 0.0 || cfg.hold_dt < 0.0)
        throw config_error("hold_duration and hold_dt must be >= 0");
    if (!(cfg.compare_max_error > 0.0))
        throw config_error("compare_max_error must be > 0");
    if (cfg.analytic_samples < 16)
        throw config_error("analytic_samples must be >= 16");
    if (cfg.alpha < 0.0 || !std::isfinite(cfg.alpha))
        throw config_error("alpha must be finite and >= 0");
}

inline void validate_sweep_axis(const SweepAxis& ax, const std::string& label) {
    if (!ax.active()) return;
    if (!is_numeric_key(ax.key))
        throw config_error(label + ": '" + ax.key + "' is not a sweepable numeric key");
    if (ax.count < 2) throw config_error(label + ": count must be >= 2");
    if (ax.start == ax.stop)
        throw config_error(label + ": identical endpoints make a degenerate sweep");
    if (ax.scale == "log" && (!(ax.start > 0.0) || !(ax.stop > 0.0)))
        throw config_error(label + ": log scale needs positive endpoints");
}

inline void validate_sweep(const ScenarioConfig& cfg) {
    if (!cfg.sweep.active()) {
        if (cfg.sweep2.active())
            throw config_error("sweep2_* is set but the first sweep axis is missing");
        throw config_error("sweep command needs sweep_key/sweep_start/sweep_stop/sweep_count");
    }
    validate_sweep_axis(cfg.sweep, "sweep");
    validate_sweep_axis(cfg.sweep2, "sweep2");
}

// The points along one sweep axis.
inline std::vector<double> sweep_values(const SweepAxis& ax) {
    std::vector<double> v;
    v.reserve(ax.count);
    for (int i = 0; i < ax.count; ++i) {
        const double f = static_cast<double>(i) / (ax.count - 1);
        if (ax.scale == "log") {
            v.push_back(ax.start * std::pow(ax.stop / ax.start, f));
        } else {
            v.push_back(ax.start + (ax.stop - ax.start) * f);
        }
    }
    return v;
}

}  // namespace photomol
