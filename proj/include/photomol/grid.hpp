#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "photomol/errors.hpp"
#include "photomol/params.hpp"

namespace photomol {

enum class Frame { retarded, lab };

inline const char* to_string(Frame f) {
    return f == Frame::retarded ? "retarded" : "lab";
}

// Stability ceiling for the lab-frame advected field: the upwind-biased
// stencil's spectrum reaches -4c/(2dz) on the real axis and the classical
// 4-stage step is stable there only up to |lambda*dt| ~ 2.79, so c*dt/dz has
// to stay below ~0.70.
inline constexpr double lab_courant_limit = 0.69;

// Uniform 1D spatial grid plus the base time stepping. Points include both
// ends: dz = (z_max - z_min)/(n_z - 1).
struct Grid1D {
    double z_min = 0.0;
    double z_max = 1.0;
    int n_z = 256;
    double dt = 0.0;  // base step [s]; 0 means "derive from the scenario"
    long n_t = 0;     // number of base steps
    Frame frame = Frame::retarded;

    double dz() const { return (z_max - z_min) / (n_z - 1); }
    double z_at(int j) const { return z_min + j * dz(); }
    double span() const { return z_max - z_min; }

    void validate(double c_light) const {
        if (!(std::isfinite(z_min)) || !(std::isfinite(z_max)) || !(z_max > z_min))
            throw config_error("grid: need finite z_max > z_min");
        if (n_z < 16) throw config_error("grid: n_z must be >= 16");
        if (!(std::isfinite(dt)) || dt < 0.0) throw config_error("grid: dt must be >= 0");
        if (n_t < 0) throw config_error("grid: n_t must be >= 0");
        if (frame == Frame::lab && dt > 0.0 &&
            c_light * dt > lab_courant_limit * dz() * (1.0 + 1e-12))
            throw config_error(
                "grid: lab frame requires c*dt <= 0.69*dz (advection stability)");
    }
};

// A stretch of simulated time with its own fixed step. Scenarios with a long
// Omega = 0 hold append a coarse segment after the switching segment.
struct TimeSegment {
    double duration = 0.0;
    double dt = 0.0;
    long steps() const { return std::max(1L, static_cast<long>(std::ceil(duration / dt - 1e-9))); }
};

enum class InitState {
    ground,     // p = s = 0 at t = 0 (medium unprepared)
    polariton,  // matter on the dark adiabatic branch of the initial envelope
};

struct SolveOptions {
    InitState init = InitState::ground;
    int snapshot_stride = 0;           // 0: pick so that ~128 slices are kept
    std::vector<TimeSegment> segments;   // empty: single segment from grid dt/n_t
    ScaledUnits units{0.0, 3.0e8};       // t_unit <= 0: derive from the grid transit time
};

// Default step: resolve the decay rates, the fastest coherent rate, the
// switch, the input-pulse time scale, and (when the box transit time is
// given) the field-feedback rate ~ G^2 * span / c through the slaved field,
// which otherwise destabilizes explicit stepping on long boxes.
inline double auto_dt(const PhysicalParams& p, const PulseSchedule& s, double pulse_duration,
                      double transit_time = 0.0) {
    double dt = std::numeric_limits<double>::infinity();
    auto cap = [&dt](double x) {
        if (x > 0.0 && std::isfinite(x)) dt = std::min(dt, x);
    };
    cap(1.0 / (50.0 * p.gamma_be()));
    if (s.shape != PulseShape::constant) cap(s.tau_switch / 50.0);
    cap(pulse_duration / 200.0);
    double fast = std::max({p.G(), s.omega0, std::abs(p.Delta) + 2.0 * std::abs(p.delta),
                            p.gamma_be(), p.gamma_bc()});
    cap(0.5 / fast);
    if (transit_time > 0.0 && p.G() > 0.0)
        cap(2.0 * M_PI / (p.G() * p.G() * transit_time));
    if (!std::isfinite(dt))
        throw config_error("auto_dt: no finite rate to derive a step from");
    return dt;
}

}  // namespace photomol
