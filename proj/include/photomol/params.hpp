#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "photomol/errors.hpp"

namespace photomol {

// Physical inputs, all SI: rates and couplings in s^-1, lengths in m, times in s.
// The condensate is uniform with density n = n_atoms / length; the collective
// coupling G = g_tilde * n_atoms sets the fastest matter-field rate.
struct PhysicalParams {
    double g_tilde = 50.0;   // reduced photoassociation coupling [s^-1]
    double n_atoms = 3.0e6;  // atoms in the interaction region
    double length  = 1.0e-3; // quantization / medium length [m]
    double c_light = 3.0e8;  // vacuum speed of light [m/s]
    double delta   = 0.0;    // two-photon detuning [s^-1]
    double Delta   = 0.0;    // one-photon detuning [s^-1]
    double gamma_b = 0.0;    // atomic loss rate [s^-1]
    double gamma_e = 0.0;    // excited-molecule decay [s^-1]
    double gamma_c = 0.0;    // stable-molecule decay [s^-1]

    double density() const { return n_atoms / length; }
    double gamma_bc() const { return 2.0 * gamma_b + gamma_c; }
    double gamma_be() const { return 2.0 * gamma_b + gamma_e; }
    double G() const { return g_tilde * n_atoms; }
    // Bare coupling in the density convention: g = g_tilde * sqrt(length),
    // so that G^2 == g^2 * length * density^2 identically.
    double g_bare() const { return g_tilde * std::sqrt(length); }

    void validate() const {
        auto bad = [](double x) { return !(std::isfinite(x)); };
        if (bad(g_tilde) || g_tilde < 0.0) throw config_error("g_tilde must be finite and >= 0");
        if (bad(n_atoms) || n_atoms <= 0.0) throw config_error("n_atoms must be finite and > 0");
        if (bad(length) || length <= 0.0) throw config_error("length must be finite and > 0");
        if (bad(c_light) || c_light <= 0.0) throw config_error("c_light must be finite and > 0");
        if (bad(delta) || bad(Delta)) throw config_error("detunings must be finite");
        if (bad(gamma_b) || gamma_b < 0.0) throw config_error("gamma_b must be finite and >= 0");
        if (bad(gamma_e) || gamma_e < 0.0) throw config_error("gamma_e must be finite and >= 0");
        if (bad(gamma_c) || gamma_c < 0.0) throw config_error("gamma_c must be finite and >= 0");
    }
};

struct DerivedRates {
    double gamma_bc;
    double gamma_be;
    double G;
};

inline DerivedRates derived_rates(const PhysicalParams& p) {
    return {p.gamma_bc(), p.gamma_be(), p.G()};
}

// ---------------------------------------------------------------------------
// Control-field schedule Omega(t).

enum class PulseShape {
    constant,
    tanh_off,         // omega0 * (1 - tanh((t-t_switch)/tau_switch)) / 2
    tanh_on,          // omega0 * (1 + tanh((t-t_switch)/tau_switch)) / 2
    off_then_on,      // tanh_off at t_switch, tanh_on at t_reswitch (storage + retrieval)
    piecewise_linear, // linear ramp omega0 -> 0 across [t_switch - tau, t_switch + tau]
};

inline const char* to_string(PulseShape s) {
    switch (s) {
        case PulseShape::constant: return "constant";
        case PulseShape::tanh_off: return "tanh-off";
        case PulseShape::tanh_on: return "tanh-on";
        case PulseShape::off_then_on: return "off-then-on";
        case PulseShape::piecewise_linear: return "piecewise-linear";
    }
    return "?";
}

struct PulseSchedule {
    PulseShape shape = PulseShape::constant;
    double omega0 = 0.0;     // plateau Rabi frequency [s^-1]
    double t_switch = 0.0;   // switch center [s]
    double tau_switch = 1.0; // switch time scale [s]
    double t_reswitch = 0.0; // second switch center (off_then_on) [s]

    void validate() const {
        if (!(std::isfinite(omega0)) || omega0 < 0.0)
            throw config_error("omega0 must be finite and >= 0");
        if (shape == PulseShape::constant) return;
        if (!(std::isfinite(t_switch))) throw config_error("t_switch must be finite");
        if (!(std::isfinite(tau_switch)) || tau_switch <= 0.0)
            throw config_error("tau_switch must be finite and > 0");
        if (shape == PulseShape::off_then_on) {
            if (!(std::isfinite(t_reswitch)) || t_reswitch <= t_switch)
                throw config_error("t_reswitch must be finite and > t_switch");
        }
    }
};

// The tanh branches are evaluated as omega0/(1 + exp(+-2x)). This is the same
// function, but 0.5*(1 - tanh(x)) cancels catastrophically once tanh(x)
// rounds toward 1, and the lost digits would turn the switch-off tail into a
// staircase that defeats the adaptive quadratures downstream.
inline double omega_at(const PulseSchedule& s, double t) {
    const auto logistic = [&](double x) {  // 0.5*(1 - tanh(x)), stably
        return s.omega0 / (1.0 + std::exp(2.0 * x));
    };
    switch (s.shape) {
        case PulseShape::constant:
            return s.omega0;
        case PulseShape::tanh_off:
            return logistic((t - s.t_switch) / s.tau_switch);
        case PulseShape::tanh_on:
            return logistic(-(t - s.t_switch) / s.tau_switch);
        case PulseShape::off_then_on:
            return logistic((t - s.t_switch) / s.tau_switch) +
                   logistic(-(t - s.t_reswitch) / s.tau_switch);
        case PulseShape::piecewise_linear: {
            const double a = s.t_switch - s.tau_switch;
            const double b = s.t_switch + s.tau_switch;
            if (t <= a) return s.omega0;
            if (t >= b) return 0.0;
            return s.omega0 * (b - t) / (b - a);
        }
    }
    return 0.0;
}

// dOmega/dt, used by the pulse-reshaping integrand.
inline double domega_dt(const PulseSchedule& s, double t) {
    auto sech2 = [](double x) {
        const double c = std::cosh(x);
        return 1.0 / (c * c);
    };
    switch (s.shape) {
        case PulseShape::constant:
            return 0.0;
        case PulseShape::tanh_off:
            return -0.5 * s.omega0 / s.tau_switch * sech2((t - s.t_switch) / s.tau_switch);
        case PulseShape::tanh_on:
            return 0.5 * s.omega0 / s.tau_switch * sech2((t - s.t_switch) / s.tau_switch);
        case PulseShape::off_then_on:
            return -0.5 * s.omega0 / s.tau_switch * sech2((t - s.t_switch) / s.tau_switch) +
                   0.5 * s.omega0 / s.tau_switch * sech2((t - s.t_reswitch) / s.tau_switch);
        case PulseShape::piecewise_linear: {
            const double a = s.t_switch - s.tau_switch;
            const double b = s.t_switch + s.tau_switch;
            if (t <= a || t >= b) return 0.0;
            return -s.omega0 / (b - a);
        }
    }
    return 0.0;
}

// Points where the schedule is only piecewise smooth; quadratures split here.
inline std::vector<double> schedule_breakpoints(const PulseSchedule& s) {
    if (s.shape == PulseShape::piecewise_linear)
        return {s.t_switch - s.tau_switch, s.t_switch + s.tau_switch};
    return {};
}

// ---------------------------------------------------------------------------
// Non-dimensionalization shared by the solvers: time in units of t_unit,
// length in units of c*t_unit (so the scaled light speed is 1), rates in
// units of 1/t_unit. Amplitudes are left untouched.
struct ScaledUnits {
    double t_unit = 1.0;
    double c_light = 3.0e8;

    double z_unit() const { return c_light * t_unit; }
    double scale_time(double t) const { return t / t_unit; }
    double unscale_time(double t) const { return t * t_unit; }
    double scale_length(double z) const { return z / z_unit(); }
    double unscale_length(double z) const { return z * z_unit(); }
    double scale_rate(double r) const { return r * t_unit; }
    double unscale_rate(double r) const { return r / t_unit; }

    void validate() const {
        if (!(std::isfinite(t_unit)) || t_unit <= 0.0)
            throw config_error("t_unit must be finite and > 0");
        if (!(std::isfinite(c_light)) || c_light <= 0.0)
            throw config_error("c_light must be finite and > 0");
    }
};

}  // namespace photomol
