#pragma once

// Mean-field condensate/field integrator. Works with scaled amplitudes
//   u = phi_b / sqrt(n)        (atomic condensate, ~1 when undepleted)
//   v = sqrt(L) * phi_e        (excited molecular field)
//   w = sqrt(L) * phi_c        (stable molecular field)
// so the composites conj(u)^2 v and conj(u)^2 w satisfy the linearized
// equations when depletion is negligible. Evolution at each grid point:
//
//   du/dt = (i delta - gamma_b) u + 2i (G/N) conj(e) conj(u) v
//   dv/dt = (-i Delta - gamma_e) v + i G e u^2 + i Omega w
//   dw/dt = -gamma_c w + i Omega v
//   dE/dz at fixed tau = i (G/c) conj(u)^2 v
//
// Two exact continuum invariants back the bookkeeping: the atom content
// N|u|^2 + 2(|v|^2 + |w|^2) is conserved pointwise in z when all decay rates
// vanish, and the excitation integral of |v|^2 + |w|^2 obeys the same
// inflow/outflow balance as the linearized matter norm.

#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <vector>

#include "photomol/detail/march.hpp"
#include "photomol/envelope.hpp"
#include "photomol/errors.hpp"
#include "photomol/grid.hpp"
#include "photomol/mb_solver.hpp"
#include "photomol/params.hpp"

namespace photomol {

struct MeanFieldModel {
    static constexpr int n_comp = 3;
    using Point = std::array<cplx, 3>;  // [0] = u, [1] = v, [2] = w

    double gb = 0.0;  // scaled gamma_b
    double ge = 0.0;  // scaled gamma_e
    double gc = 0.0;  // scaled gamma_c
    double D1 = 0.0;  // scaled Delta
    double D2 = 0.0;  // scaled delta
    double Gs = 0.0;  // scaled G
    double n_atoms = 1.0;

    cplx source(const Point& q) const { return std::conj(q[0]) * std::conj(q[0]) * q[1]; }

    // Midpoint-cell excitation density |avg v|^2 + |avg w|^2 used by the
    // conservation bookkeeping; the condensate u is the reservoir and is
    // tracked separately through the atom content.
    double cell_excitation(const Point& a, const Point& b) const {
        return std::norm(0.5 * (a[1] + b[1])) + std::norm(0.5 * (a[2] + b[2]));
    }

    void rhs(const Point& q, cplx e, double omega, Point& out) const {
        const cplx i1(0.0, 1.0);
        out[0] = (i1 * D2 - gb) * q[0] +
                 (2.0 * Gs / n_atoms) * i1 * std::conj(e) * std::conj(q[0]) * q[1];
        out[1] = (-i1 * D1 - ge) * q[1] + i1 * Gs * e * q[0] * q[0] + i1 * omega * q[2];
        out[2] = -gc * q[2] + i1 * omega * q[1];
    }
};

struct MeanFieldState {
    double tau = 0.0;  // retarded time, seconds
    std::vector<cplx> u, v, w, e;
};

struct MfRunResult {
    PhysicalParams params;
    PulseSchedule schedule;
    Grid1D grid;
    ScaledUnits units;
    InitState init = InitState::ground;
    std::vector<MeanFieldState> history;

    double injected_norm2 = 0.0;  // |amplitude|^2 * meters, as in the linearized run
    double outflow_norm2 = 0.0;
    double stored_norm2_initial = 0.0;  // matter content crossing the t = 0 surface
    double stored_norm2_final = 0.0;
    // Inflow/outflow balance of |v|^2 + |w|^2; NaN when any decay is active.
    // The exchange balance holds in the continuum even with depletion (both
    // sides of the identity reduce to Im(conj(e) u^2 v)), but the discrete
    // pairing of the slaved field with the cell-edge condensate leaves an
    // O(dz^2) defect wherever u has spatial structure; expect it to quarter
    // per grid doubling on depleted runs, unlike the linearized residual.
    double photon_residual = std::numeric_limits<double>::quiet_NaN();
    // Drift of the total atom content; NaN when any decay is active.
    double atom_residual = std::numeric_limits<double>::quiet_NaN();
    // Largest fraction of atoms bound in molecules over the recorded history;
    // the linearized treatment is trustworthy only while this stays small.
    double molecular_fraction_max = 0.0;
    long steps_total = 0;

    const MeanFieldState& final_state() const { return history.back(); }
};

namespace detail {

inline double atom_content(const std::vector<cplx>& u, const std::vector<cplx>& v,
                           const std::vector<cplx>& w, double n_atoms, double dz) {
    double s = 0.0;
    const std::size_t n = u.size();
    for (std::size_t j = 0; j < n; ++j) {
        const double wt = (j == 0 || j + 1 == n) ? 0.5 : 1.0;
        s += wt * (n_atoms * std::norm(u[j]) + 2.0 * (std::norm(v[j]) + std::norm(w[j])));
    }
    return s * dz;
}

}  // namespace detail

inline MfRunResult integrate_meanfield(const PhysicalParams& params,
                                       const PulseSchedule& schedule, const Grid1D& grid,
                                       const Envelope& env0, const SolveOptions& opts) {
    params.validate();
    schedule.validate();
    grid.validate(params.c_light);
    if (grid.frame != Frame::retarded)
        throw config_error("mean-field runs support the retarded frame only");

    ScaledUnits units = opts.units;
    units.c_light = params.c_light;
    if (!(units.t_unit > 0.0)) units.t_unit = grid.span() / params.c_light;
    units.validate();
    const double t_unit = units.t_unit;
    const double z_unit = units.z_unit();

    MeanFieldModel model;
    model.gb = params.gamma_b * t_unit;
    model.ge = params.gamma_e * t_unit;
    model.gc = params.gamma_c * t_unit;
    model.D1 = params.Delta * t_unit;
    model.D2 = params.delta * t_unit;
    model.Gs = params.G() * t_unit;
    model.n_atoms = params.n_atoms;

    const double dz_s = grid.dz() / z_unit;
    const auto segs = detail::scaled_segments(grid, opts, t_unit);
    int stride = opts.snapshot_stride;
    if (stride <= 0) stride = std::max<long>(1, detail::total_steps(segs) / 128);

    auto boundary = [&env0, &grid, z_unit](double tau_s) -> cplx {
        return env0(grid.z_min - z_unit * tau_s);
    };
    auto omega = [&schedule, t_unit](double t_s) -> double {
        return t_unit * omega_at(schedule, t_s * t_unit);
    };

    const double omega_start = omega_at(schedule, 0.0);
    if (opts.init == InitState::polariton && !(omega_start > 0.0))
        throw degenerate_input_error("polariton start needs a nonzero control field at t = 0");
    if (opts.init == InitState::polariton && !(params.G() > 0.0))
        throw degenerate_input_error("polariton start needs a nonzero collective coupling");
    // Same second-order adiabatic-branch start as the linearized solver,
    // written in the (u, v, w) variables with an undepleted condensate u = 1.
    auto init_cont = [&](double z) -> MeanFieldModel::Point {
        if (opts.init == InitState::polariton) {
            const double c = params.c_light;
            const double G = params.G();
            const double g2w2 = G * G + omega_start * omega_start;
            const cplx v0 = cplx(0.0, -1.0) * (c * G / g2w2) *
                            envelope_derivative(env0, z, grid.dz());
            const cplx w0 = -(G / omega_start) * env0(z) +
                            (c * c * G * omega_start / (g2w2 * g2w2)) *
                                envelope_second_derivative(env0, z, grid.dz());
            return {cplx{1.0, 0.0}, v0, w0};
        }
        return {cplx{1.0, 0.0}, cplx{0.0, 0.0}, cplx{0.0, 0.0}};
    };
    auto init_at = [&](int j) { return init_cont(grid.z_at(j)); };
    auto front_src = [&](double tau_s) -> cplx {
        return model.source(init_cont(grid.z_min - z_unit * tau_s));
    };

    detail::RetardedMarcher<MeanFieldModel> m(model, grid.n_z, dz_s, model.Gs, boundary,
                                              omega, front_src);
    double atoms0 = 0.0;
    {
        std::vector<cplx> u0(grid.n_z), v0(grid.n_z), w0(grid.n_z);
        for (int j = 0; j < grid.n_z; ++j) {
            const auto q = init_at(j);
            u0[j] = q[0];
            v0[j] = q[1];
            w0[j] = q[2];
        }
        atoms0 = detail::atom_content(u0, v0, w0, params.n_atoms, grid.dz());
    }
    auto raw = m.run(init_at, segs, stride);
    // Booked by the marcher cell by cell as the t = 0 surface is swept.
    const double stored0 = raw.activated_norm2 * z_unit;

    MfRunResult out;
    out.params = params;
    out.schedule = schedule;
    out.grid = grid;
    out.units = units;
    out.init = opts.init;
    out.steps_total = raw.steps_total;
    out.injected_norm2 = raw.flux_in * z_unit;
    out.outflow_norm2 = raw.flux_out * z_unit;
    out.stored_norm2_initial = stored0;

    out.history.reserve(raw.slices.size());
    for (auto& sl : raw.slices) {
        MeanFieldState ms;
        ms.tau = sl.tau * t_unit;
        ms.e = std::move(sl.e);
        ms.u.resize(sl.q.size());
        ms.v.resize(sl.q.size());
        ms.w.resize(sl.q.size());
        for (std::size_t j = 0; j < sl.q.size(); ++j) {
            ms.u[j] = sl.q[j][0];
            ms.v[j] = sl.q[j][1];
            ms.w[j] = sl.q[j][2];
        }
        out.history.push_back(std::move(ms));
    }

    const double span = grid.span();
    for (const auto& ms : out.history) {
        double x = 0.0;
        const std::size_t n = ms.v.size();
        for (std::size_t j = 0; j < n; ++j) {
            const double wt = (j == 0 || j + 1 == n) ? 0.5 : 1.0;
            x += wt * (std::norm(ms.v[j]) + std::norm(ms.w[j]));
        }
        x *= grid.dz();
        const double frac = 2.0 * x / (params.n_atoms * span);
        if (frac > out.molecular_fraction_max) out.molecular_fraction_max = frac;
    }

    const auto& fin = out.history.back();
    out.stored_norm2_final = detail::midcell_norm2(fin.v, grid.dz()) +
                             detail::midcell_norm2(fin.w, grid.dz());

    const bool lossless =
        params.gamma_b == 0.0 && params.gamma_e == 0.0 && params.gamma_c == 0.0;
    if (lossless) {
        const double in_total = out.injected_norm2 + out.stored_norm2_initial;
        out.photon_residual =
            std::abs(out.stored_norm2_final + out.outflow_norm2 - in_total) /
            std::max(in_total, 1e-300);
        const double atoms_end =
            detail::atom_content(fin.u, fin.v, fin.w, params.n_atoms, grid.dz());
        out.atom_residual = std::abs(atoms_end / atoms0 - 1.0);
    }
    return out;
}

// Composite amplitudes conj(u)^2 v and conj(u)^2 w from a mean-field slice;
// these are directly comparable with the linearized (p, s) arrays.
inline void composite_amplitudes(const MeanFieldState& ms, std::vector<cplx>& p_like,
                                 std::vector<cplx>& s_like) {
    const std::size_t n = ms.u.size();
    p_like.resize(n);
    s_like.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        const cplx uc2 = std::conj(ms.u[j]) * std::conj(ms.u[j]);
        p_like[j] = uc2 * ms.v[j];
        s_like[j] = uc2 * ms.w[j];
    }
}

}  // namespace photomol
