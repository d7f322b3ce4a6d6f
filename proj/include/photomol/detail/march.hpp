#pragma once

// Retarded-frame marching core shared by the linearized and mean-field
// solvers. Internally everything is scaled: time in t_unit, length in
// c*t_unit (so light moves one length unit per time unit), rates premultiplied
// by t_unit. Amplitudes are untouched.
//
// Coordinates: tau = t - (z - z_min)/c. At fixed tau the field obeys
// dE/dz = i*(G/c)*source, so E is slaved to the matter state and is rebuilt
// by trapezoidal accumulation at every stage. Matter marches in tau with a
// classical 4-stage explicit (RK4) step.
//
// The t = 0 initial surface is slanted in (z, tau): point j becomes active at
// tau_j = -j*dz/c. Phase 1 sweeps tau from -(n_z-1)*dz/c up to 0, activating
// one point per dz/c of tau. The true front z = z_min - c*tau moves
// continuously, so between activations it sits up to one cell left of the
// first active grid point; the inflow value there is env0(z_min - c*tau) (the
// t = 0 field at the front) plus the trapezoidal response of the virgin
// matter strip separating the front from the grid (without the strip term the
// front value lags by O(dz) for the whole of phase 1 and the march as a whole
// drops to first order). Each dz/c advance is taken in RK4 sub-steps no
// coarser than the first scenario segment's dt: a single dz-sized step would
// sit far outside the stability region of the slaved-field feedback
// (|lambda| up to ~ G^2 * span / (pi c^2)) whenever dz exceeds the scenario
// step, and the resulting transient junk radiates out through the field and
// corrupts the boundary-flux bookkeeping. Phase 2 (tau >= 0) continues with
// the scenario time segments.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <string>
#include <vector>

#include "photomol/errors.hpp"
#include "photomol/grid.hpp"

namespace photomol::detail {

using cplx = std::complex<double>;

template <class Model>
struct MarchSlice {
    double tau;  // scaled
    std::vector<cplx> e;
    std::vector<typename Model::Point> q;
};

template <class Model>
struct MarchResult {
    std::vector<MarchSlice<Model>> slices;  // tau >= 0 strides; tau = 0 and final included
    double flux_in = 0.0;                   // scaled units of integral |e|^2 dz
    double flux_out = 0.0;
    // Excitation content swept up along the slanted t = 0 surface, accumulated
    // cell by cell (Model::cell_excitation, midpoint rule) the moment each cell
    // completes. Booking it at activation time is what makes the lossless
    // balance "activated + flux_in = stored + flux_out" exact up to
    // time-integration error. Retarded marches only; zero in the lab frame.
    double activated_norm2 = 0.0;
    long steps_total = 0;
};

template <class Model>
class RetardedMarcher {
public:
    RetardedMarcher(const Model& model, int n_z, double dz, double Gs,
                    std::function<cplx(double)> boundary,     // b(tau), scaled tau
                    std::function<double(double)> omega,      // Omega(t_lab), scaled
                    std::function<cplx(double)> front_source)  // virgin source at the
                                                               // moving front, by tau
        : model_(model), n_z_(n_z), dz_(dz), Gs_(Gs),
          boundary_(std::move(boundary)), omega_(std::move(omega)),
          front_source_(std::move(front_source)) {
        q_.assign(n_z_, typename Model::Point{});
        for (auto* a : {&k1_, &k2_, &k3_, &k4_, &qs_}) a->assign(n_z_, typename Model::Point{});
        e_.assign(n_z_, cplx{});
        src_.assign(n_z_, cplx{});
    }

    // init_at(j): matter state the moment point j activates (lab t = 0).
    template <class InitFn>
    MarchResult<Model> run(const InitFn& init_at, const std::vector<TimeSegment>& segments,
                           int stride) {
        MarchResult<Model> out;
        // ---- phase 1: fill-in along the slanted t = 0 surface ----
        const double dt0 = segments.empty() ? dz_ : segments.front().dt;
        const long m = TimeSegment{dz_, dt0}.steps();
        const double sub = dz_ / m;
        int front = n_z_ - 1;
        q_[front] = init_at(front);
        for (int k = 0; k < n_z_ - 1; ++k) {
            const double tau = -(n_z_ - 1 - k) * dz_;
            for (long i = 0; i < m; ++i) step(tau + i * sub, sub, front, out);
            --front;
            q_[front] = init_at(front);
            out.activated_norm2 += dz_ * model_.cell_excitation(q_[front], q_[front + 1]);
        }
        // ---- phase 2: tau >= 0 over the scenario segments ----
        record(out, 0.0);
        double base = 0.0;
        for (std::size_t si = 0; si < segments.size(); ++si) {
            const auto& seg = segments[si];
            const long n = seg.steps();
            const double dt = seg.duration / n;
            for (long i = 0; i < n; ++i) {
                const double tau = base + i * dt;
                step(tau, dt, 0, out);
                if ((out.steps_total & 63) == 0) spot_check(tau);
                const bool seg_end = (i + 1 == n);  // boundary/final records cover these
                if (!seg_end && stride > 0 && (i + 1) % stride == 0) record(out, tau + dt);
            }
            base += seg.duration;
            if (si + 1 < segments.size()) record(out, base);
        }
        full_check(base);
        record(out, base);
        return out;
    }

private:
    // Rebuild the slaved field on [front, n_z) at stage time tau.
    void sweep_field(const std::vector<typename Model::Point>& q, double tau, int front) {
        for (int j = front; j < n_z_; ++j) src_[j] = model_.source(q[j]);
        cplx ef = boundary_(tau);
        if (front > 0) {
            // Partial cell between the moving activation front and the first
            // active grid point (phase 1 only): fold in its trapezoidal
            // response, anchored on the just-activating virgin matter.
            const double strip = std::clamp(front * dz_ + tau, 0.0, dz_);
            if (strip > 0.0)
                ef += cplx(0.0, 0.5 * Gs_ * strip) * (front_source_(tau) + src_[front]);
        }
        e_[front] = ef;
        const cplx pref = cplx(0.0, 1.0) * (0.5 * Gs_ * dz_);
        for (int j = front + 1; j < n_z_; ++j)
            e_[j] = e_[j - 1] + pref * (src_[j - 1] + src_[j]);
    }

    // One derivative evaluation at (q, tau); also samples the boundary fluxes.
    void stage(const std::vector<typename Model::Point>& q, double tau, int front,
               std::vector<typename Model::Point>& k, double& flux_in, double& flux_out) {
        sweep_field(q, tau, front);
        for (int j = front; j < n_z_; ++j) {
            const double t_lab = tau + j * dz_;  // scaled light speed is 1
            model_.rhs(q[j], e_[j], omega_(t_lab), k[j]);
        }
        flux_in = std::norm(e_[front]);
        flux_out = std::norm(e_[n_z_ - 1]);
    }

    void step(double tau, double dt, int front, MarchResult<Model>& out) {
        constexpr int N = Model::n_comp;
        double fi1, fo1, fi2, fo2, fi3, fo3, fi4, fo4;
        stage(q_, tau, front, k1_, fi1, fo1);
        axpy(k1_, 0.5 * dt, front);
        stage(qs_, tau + 0.5 * dt, front, k2_, fi2, fo2);
        axpy(k2_, 0.5 * dt, front);
        stage(qs_, tau + 0.5 * dt, front, k3_, fi3, fo3);
        axpy(k3_, dt, front);
        stage(qs_, tau + dt, front, k4_, fi4, fo4);
        const double w = dt / 6.0;
        for (int j = front; j < n_z_; ++j)
            for (int c = 0; c < N; ++c)
                q_[j][c] += w * (k1_[j][c] + 2.0 * k2_[j][c] + 2.0 * k3_[j][c] + k4_[j][c]);
        out.flux_in += w * (fi1 + 2.0 * fi2 + 2.0 * fi3 + fi4);
        out.flux_out += w * (fo1 + 2.0 * fo2 + 2.0 * fo3 + fo4);
        ++out.steps_total;
    }

    void axpy(const std::vector<typename Model::Point>& k, double a, int front) {
        constexpr int N = Model::n_comp;
        for (int j = front; j < n_z_; ++j)
            for (int c = 0; c < N; ++c) qs_[j][c] = q_[j][c] + a * k[j][c];
    }

    void record(MarchResult<Model>& out, double tau) {
        sweep_field(q_, tau, 0);  // field consistent with the updated matter state
        MarchSlice<Model> s;
        s.tau = tau;
        s.e = e_;
        s.q = q_;
        out.slices.push_back(std::move(s));
    }

    void spot_check(double tau) const {
        const auto& a = q_[n_z_ / 2];
        const auto& b = q_[n_z_ - 1];
        for (int c = 0; c < Model::n_comp; ++c)
            if (!std::isfinite(a[c].real()) || !std::isfinite(b[c].real())) fail(tau);
    }

    void full_check(double tau) const {
        for (int j = 0; j < n_z_; ++j)
            for (int c = 0; c < Model::n_comp; ++c)
                if (!std::isfinite(q_[j][c].real()) || !std::isfinite(q_[j][c].imag()))
                    fail(tau);
    }

    [[noreturn]] void fail(double tau) const {
        throw numerical_error("solver state became non-finite near scaled tau = " +
                              std::to_string(tau) + "; reduce dt or check rates");
    }

    Model model_;
    int n_z_;
    double dz_, Gs_;
    std::function<cplx(double)> boundary_;
    std::function<double(double)> omega_;
    std::function<cplx(double)> front_source_;
    std::vector<typename Model::Point> q_, k1_, k2_, k3_, k4_, qs_;
    std::vector<cplx> e_, src_;
};

// ---------------------------------------------------------------------------
// Lab-frame marcher (cross-validation path): the field is a dynamical
// variable advected with an upwind-biased stencil; c*dt <= 0.69*dz applies
// (see lab_courant_limit).
template <class Model>
class LabMarcher {
public:
    LabMarcher(const Model& model, int n_z, double dz, double Gs,
               std::function<cplx(double)> boundary,
               std::function<double(double)> omega)
        : model_(model), n_z_(n_z), dz_(dz), Gs_(Gs),
          boundary_(std::move(boundary)), omega_(std::move(omega)) {
        q_.assign(n_z_, typename Model::Point{});
        for (auto* a : {&k1_, &k2_, &k3_, &k4_, &qs_}) a->assign(n_z_, typename Model::Point{});
        e_.assign(n_z_, cplx{});
        for (auto* a : {&ke1_, &ke2_, &ke3_, &ke4_, &es_}) a->assign(n_z_, cplx{});
    }

    template <class InitFn, class EInitFn>
    MarchResult<Model> run(const InitFn& init_at, const EInitFn& e_init,
                           const std::vector<TimeSegment>& segments, int stride) {
        MarchResult<Model> out;
        for (int j = 0; j < n_z_; ++j) {
            q_[j] = init_at(j);
            e_[j] = e_init(j);
        }
        record(out, 0.0);
        double base = 0.0;
        for (std::size_t si = 0; si < segments.size(); ++si) {
            const auto& seg = segments[si];
            const long n = seg.steps();
            const double dt = seg.duration / n;
            if (dt > lab_courant_limit * dz_ * (1.0 + 1e-12))
                throw config_error(
                    "lab frame: the advected-field stencil needs c*dt <= 0.69*dz");
            for (long i = 0; i < n; ++i) {
                const double t = base + i * dt;
                step(t, dt, out);
                if ((out.steps_total & 63) == 0) spot_check(t);
                const bool seg_end = (i + 1 == n);
                if (!seg_end && stride > 0 && (i + 1) % stride == 0) record(out, t + dt);
            }
            base += seg.duration;
            if (si + 1 < segments.size()) record(out, base);
        }
        full_check(base);
        record(out, base);
        return out;
    }

private:
    void stage(const std::vector<typename Model::Point>& q, const std::vector<cplx>& e,
               double t, std::vector<typename Model::Point>& kq, std::vector<cplx>& ke,
               double& flux_in, double& flux_out) {
        const cplx ig = cplx(0.0, 1.0) * Gs_;
        ke[0] = 0.0;  // inflow value is imposed, not evolved
        for (int j = 1; j < n_z_; ++j) {
            cplx dze;
            if (j >= 2)
                dze = (3.0 * e[j] - 4.0 * e[j - 1] + e[j - 2]) / (2.0 * dz_);
            else
                dze = (e[j] - e[j - 1]) / dz_;
            ke[j] = -dze + ig * model_.source(q[j]);
        }
        const double om = omega_(t);
        for (int j = 0; j < n_z_; ++j) model_.rhs(q[j], e[j], om, kq[j]);
        flux_in = std::norm(e[0]);
        flux_out = std::norm(e[n_z_ - 1]);
    }

    void step(double t, double dt, MarchResult<Model>& out) {
        constexpr int N = Model::n_comp;
        double fi1, fo1, fi2, fo2, fi3, fo3, fi4, fo4;
        e_[0] = boundary_(t);
        stage(q_, e_, t, k1_, ke1_, fi1, fo1);
        axpy(0.5 * dt, k1_, ke1_, t + 0.5 * dt);
        stage(qs_, es_, t + 0.5 * dt, k2_, ke2_, fi2, fo2);
        axpy(0.5 * dt, k2_, ke2_, t + 0.5 * dt);
        stage(qs_, es_, t + 0.5 * dt, k3_, ke3_, fi3, fo3);
        axpy(dt, k3_, ke3_, t + dt);
        stage(qs_, es_, t + dt, k4_, ke4_, fi4, fo4);
        const double w = dt / 6.0;
        for (int j = 0; j < n_z_; ++j) {
            for (int c = 0; c < N; ++c)
                q_[j][c] += w * (k1_[j][c] + 2.0 * k2_[j][c] + 2.0 * k3_[j][c] + k4_[j][c]);
            e_[j] += w * (ke1_[j] + 2.0 * ke2_[j] + 2.0 * ke3_[j] + ke4_[j]);
        }
        e_[0] = boundary_(t + dt);
        out.flux_in += w * (fi1 + 2.0 * fi2 + 2.0 * fi3 + fi4);
        out.flux_out += w * (fo1 + 2.0 * fo2 + 2.0 * fo3 + fo4);
        ++out.steps_total;
    }

    void axpy(double a, const std::vector<typename Model::Point>& kq,
              const std::vector<cplx>& ke, double t_stage) {
        constexpr int N = Model::n_comp;
        for (int j = 0; j < n_z_; ++j) {
            for (int c = 0; c < N; ++c) qs_[j][c] = q_[j][c] + a * kq[j][c];
            es_[j] = e_[j] + a * ke[j];
        }
        es_[0] = boundary_(t_stage);
    }

    void record(MarchResult<Model>& out, double tau) {
        MarchSlice<Model> s;
        s.tau = tau;
        s.e = e_;
        s.q = q_;
        out.slices.push_back(std::move(s));
    }

    void spot_check(double t) const {
        if (!std::isfinite(e_[n_z_ - 1].real()) || !std::isfinite(q_[n_z_ / 2][0].real()))
            fail(t);
    }

    void full_check(double t) const {
        for (int j = 0; j < n_z_; ++j) {
            if (!std::isfinite(e_[j].real()) || !std::isfinite(e_[j].imag())) fail(t);
            for (int c = 0; c < Model::n_comp; ++c)
                if (!std::isfinite(q_[j][c].real()) || !std::isfinite(q_[j][c].imag())) fail(t);
        }
    }

    [[noreturn]] void fail(double t) const {
        throw numerical_error("solver state became non-finite near scaled t = " +
                              std::to_string(t) + "; reduce dt or check rates");
    }

    Model model_;
    int n_z_;
    double dz_, Gs_;
    std::function<cplx(double)> boundary_;
    std::function<double(double)> omega_;
    std::vector<typename Model::Point> q_, k1_, k2_, k3_, k4_, qs_;
    std::vector<cplx> e_, ke1_, ke2_, ke3_, ke4_, es_;
};

}  // namespace photomol::detail
