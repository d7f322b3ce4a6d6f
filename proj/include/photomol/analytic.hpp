#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <string>

#include "photomol/envelope.hpp"
#include "photomol/errors.hpp"
#include "photomol/params.hpp"
#include "photomol/quadrature.hpp"

namespace photomol {

// Mixing angle theta(t): tan(theta) = G / Omega. theta = 0 means the
// excitation is all light, theta = pi/2 all stable molecules.
inline double mixing_angle(const PhysicalParams& p, double omega) {
    return std::atan2(p.G(), omega);
}

// Group velocity without decay: c * cos^2(theta) = c * Omega^2/(Omega^2+G^2).
inline double group_velocity_lossless(const PhysicalParams& p, double omega) {
    const double g2 = p.G() * p.G();
    const double o2 = omega * omega;
    const double den = o2 + g2;
    if (den == 0.0) return p.c_light;  // no coupling at all: free light
    return p.c_light * o2 / den;
}

// Group velocity with decay: c / (1 + G^2/(Omega^2 + gamma_be*gamma_bc)).
inline double group_velocity_lossy(const PhysicalParams& p, double omega) {
    const double g2 = p.G() * p.G();
    const double gg = p.gamma_be() * p.gamma_bc();
    const double o2 = omega * omega;
    const double den = o2 + gg + g2;
    if (den == 0.0) return p.c_light;
    return p.c_light * (o2 + gg) / den;
}

namespace detail {
inline QuadratureOptions quad_opts() {
    QuadratureOptions o;
    o.rel_tol = 1.0e-10;
    return o;
}
}  // namespace detail

// Accumulated pulse displacement integral(0..t) v_g dt'.
inline double retarded_coordinate(const PhysicalParams& p, const PulseSchedule& s,
                                  double t, bool lossy = true,
                                  QuadratureOptions opt = detail::quad_opts()) {
    if (t == 0.0) return 0.0;
    auto f = [&](double u) {
        const double om = omega_at(s, u);
        return lossy ? group_velocity_lossy(p, om) : group_velocity_lossless(p, om);
    };
    return integrate_adaptive_split(f, 0.0, t, schedule_breakpoints(s), opt);
}

// Polariton decay rate Gamma(t) = G^2 gamma_bc / (Omega^2 + gamma_be*gamma_bc + G^2).
inline double polariton_decay_rate(const PhysicalParams& p, double omega) {
    const double g2 = p.G() * p.G();
    const double gg = p.gamma_be() * p.gamma_bc();
    const double den = omega * omega + gg + g2;
    if (den == 0.0) return 0.0;
    return g2 * p.gamma_bc() / den;
}

// integral(0..t) Gamma dt'; transfer efficiency is exp(-this).
inline double gamma_integral(const PhysicalParams& p, const PulseSchedule& s, double t,
                             QuadratureOptions opt = detail::quad_opts()) {
    if (t == 0.0 || p.gamma_bc() == 0.0 || p.G() == 0.0) return 0.0;
    auto f = [&](double u) { return polariton_decay_rate(p, omega_at(s, u)); };
    return integrate_adaptive_split(f, 0.0, t, schedule_breakpoints(s), opt);
}

// Pulse-reshaping rate
//   alpha(t) = -G^2 * (dOmega/dt / Omega) * (gg - Omega^2)
//              / ((Omega^2 + gg) * (Omega^2 + gg + G^2)),  gg = gamma_be*gamma_bc.
// Zero while the control field is flat; needs Omega > 0 where it changes.
inline double alpha_integrand(const PhysicalParams& p, const PulseSchedule& s, double t) {
    if (p.G() == 0.0) return 0.0;
    const double dom = domega_dt(s, t);
    if (dom == 0.0) return 0.0;
    const double om = omega_at(s, t);
    if (!(om > 0.0)) throw numerical_error("alpha integrand evaluated at Omega <= 0");
    const double g2 = p.G() * p.G();
    const double gg = p.gamma_be() * p.gamma_bc();
    const double o2 = om * om;
    return -g2 * (dom / om) * (gg - o2) / ((o2 + gg) * (o2 + gg + g2));
}

// integral(0..t) alpha dt'.
inline double alpha_integral(const PhysicalParams& p, const PulseSchedule& s, double t,
                             QuadratureOptions opt = detail::quad_opts()) {
    if (t == 0.0 || p.G() == 0.0) return 0.0;
    auto f = [&](double u) { return alpha_integrand(p, s, u); };
    return integrate_adaptive_split(f, 0.0, t, schedule_breakpoints(s), opt);
}

struct TransferFactors {
    double f;    // G^2 / (gg + G^2)
    double h;    // 1/2 + gg / (2*(gg + G^2))
    double eta;  // exp(-integral Gamma) up to the probe time
};

inline TransferFactors transfer_factors_at(const PhysicalParams& p, const PulseSchedule& s,
                                           double t) {
    const double g2 = p.G() * p.G();
    const double gg = p.gamma_be() * p.gamma_bc();
    const double den = gg + g2;
    TransferFactors out{};
    out.f = (den == 0.0) ? 1.0 : g2 / den;
    out.h = (den == 0.0) ? 0.5 : 0.5 + gg / (2.0 * den);
    out.eta = std::exp(-gamma_integral(p, s, t));
    return out;
}

// Asymptotic closed form for exp(integral alpha), valid for
// Omega^2(0) >> G^2, gg and monotone switch-off:
//   (Omega(0)/Omega(t))^f * (gg + Omega^2(t))/Omega^2(0) * (Omega^2(0)/(gg + G^2))^h.
inline double lossy_amplitude_closed_form(const PhysicalParams& p, const PulseSchedule& s,
                                          double t) {
    const double om0 = omega_at(s, 0.0);
    const double omt = omega_at(s, t);
    if (!(om0 > 0.0)) throw degenerate_input_error("closed form needs Omega(0) > 0");
    if (!(omt > 0.0)) throw degenerate_input_error("closed form needs Omega(t) > 0");
    const double g2 = p.G() * p.G();
    const double gg = p.gamma_be() * p.gamma_bc();
    const TransferFactors tf = transfer_factors_at(p, s, 0.0);
    const double log_val = tf.f * std::log(om0 / omt) +
                           std::log((gg + omt * omt) / (om0 * om0)) +
                           tf.h * std::log(om0 * om0 / (gg + g2));
    return std::exp(log_val);
}

// Light envelope under lossless adiabatic following:
//   E(z,t) = cos(theta(t))/cos(theta(0)) * E0(z - R(t)).
inline std::complex<double> lossless_envelope(const PhysicalParams& p, const PulseSchedule& s,
                                              const Envelope& env0, double z, double t) {
    const double om0 = omega_at(s, 0.0);
    if (!(om0 > 0.0) && p.G() > 0.0)
        throw degenerate_input_error("lossless envelope: zero initial control field");
    const double c0 = std::cos(mixing_angle(p, om0));
    const double ct = std::cos(mixing_angle(p, omega_at(s, t)));
    const double shift = retarded_coordinate(p, s, t, /*lossy=*/false);
    return (c0 == 0.0 ? 0.0 : ct / c0) * env0(z - shift);
}

// Stable-molecule amplitude on the lossless adiabatic branch, in the solver's
// scaled normalization (s = sqrt(L)*phi_c):
//   s(z,t) = -(G/Omega(0)) * sqrt((Omega^2(0)+G^2)/(Omega^2(t)+G^2)) * E0(z - R(t)).
// For Omega(t) -> 0 with Omega(0) >> G this tends to -E0(z - R(t)).
inline std::complex<double> molecular_envelope_lossless(const PhysicalParams& p,
                                                        const PulseSchedule& s,
                                                        const Envelope& env0,
                                                        double z, double t) {
    const double om0 = omega_at(s, 0.0);
    if (!(om0 > 0.0))
        throw degenerate_input_error("molecular envelope: zero initial control field");
    const double g2 = p.G() * p.G();
    const double omt = omega_at(s, t);
    const double ratio = std::sqrt((om0 * om0 + g2) / (omt * omt + g2));
    const double shift = retarded_coordinate(p, s, t, /*lossy=*/false);
    return -(p.G() / om0) * ratio * env0(z - shift);
}

// Decaying adiabatic envelope E0(z-R)*exp(int alpha)*exp(-int Gamma).
// Soft-flagged: trustworthy only while Omega^2(0) >> G^2, gg and before the
// branch inverts (Omega^2(t) below gg).
inline Flagged<std::complex<double>> lossy_envelope(const PhysicalParams& p,
                                                    const PulseSchedule& s,
                                                    const Envelope& env0,
                                                    double z, double t) {
    const double om0 = omega_at(s, 0.0);
    if (!(om0 > 0.0))
        throw degenerate_input_error("lossy envelope: zero initial control field");
    Flagged<std::complex<double>> out;
    const double g2 = p.G() * p.G();
    const double gg = p.gamma_be() * p.gamma_bc();
    const double omt = omega_at(s, t);
    if (om0 * om0 < 100.0 * std::max(g2, gg)) {
        out.in_regime = false;
        out.note = "initial control too weak: Omega^2(0) < 100*max(G^2, gamma_be*gamma_bc)";
    } else if (gg > 0.0 && omt * omt < gg) {
        out.in_regime = false;
        out.note = "adiabatic branch inverted: Omega^2(t) < gamma_be*gamma_bc";
    }
    const double amp = std::exp(alpha_integral(p, s, t) - gamma_integral(p, s, t));
    const double shift = retarded_coordinate(p, s, t, /*lossy=*/true);
    out.value = amp * env0(z - shift);
    return out;
}

// Order-of-magnitude operating limits.
struct RegimeEstimates {
    double v_g_limit;  // slowest group velocity, Omega -> 0 [m/s]
    double t_max;      // storage-time estimate 1/gamma_bc [s]; +inf when gamma_bc = 0
    double z_max;      // propagation-distance estimate gamma_be*c/G^2 [m]
};

inline RegimeEstimates regime_estimates(const PhysicalParams& p) {
    const double g2 = p.G() * p.G();
    const double gg = p.gamma_be() * p.gamma_bc();
    RegimeEstimates r{};
    r.v_g_limit = (g2 + gg == 0.0) ? p.c_light : p.c_light * gg / (g2 + gg);
    r.t_max = (p.gamma_bc() > 0.0) ? 1.0 / p.gamma_bc()
                                   : std::numeric_limits<double>::infinity();
    r.z_max = (g2 > 0.0) ? p.gamma_be() * p.c_light / g2
                         : std::numeric_limits<double>::infinity();
    return r;
}

// The closed forms assume |Delta|, |2*delta| << G; warn (don't fail) outside.
struct DetuningCheck {
    bool ok = true;
    std::string note;
};

inline DetuningCheck check_small_detuning(const PhysicalParams& p) {
    DetuningCheck c;
    const double scale = 0.1 * p.G();
    if (std::abs(p.Delta) > scale || 2.0 * std::abs(p.delta) > scale) {
        c.ok = false;
        c.note = "detunings are not small against G; closed forms degrade";
    }
    return c;
}

}  // namespace photomol
