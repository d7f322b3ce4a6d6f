#pragma once

#include <cmath>
#include <complex>
#include <functional>

#include "photomol/errors.hpp"

namespace photomol {

// Complex spatial envelope E(z, t=0). Scenarios keep the support inside the
// simulation window; the solvers only ever sample it.
using Envelope = std::function<std::complex<double>(double)>;

inline Envelope gaussian_pulse(double center, double width, double amplitude) {
    if (!(width > 0.0)) throw config_error("gaussian_pulse: width must be > 0");
    return [=](double z) -> std::complex<double> {
        const double x = (z - center) / width;
        return amplitude * std::exp(-0.5 * x * x);
    };
}

inline Envelope sech_pulse(double center, double width, double amplitude) {
    if (!(width > 0.0)) throw config_error("sech_pulse: width must be > 0");
    return [=](double z) -> std::complex<double> {
        return amplitude / std::cosh((z - center) / width);
    };
}

// Central-difference derivative; h should track the grid spacing so the
// truncation error matches the solver's spatial order.
inline std::complex<double> envelope_derivative(const Envelope& f, double z, double h) {
    if (!(h > 0.0)) throw config_error("envelope_derivative: step must be > 0");
    return (f(z + h) - f(z - h)) / (2.0 * h);
}

// Central-difference second derivative with the same step convention.
inline std::complex<double> envelope_second_derivative(const Envelope& f, double z, double h) {
    if (!(h > 0.0)) throw config_error("envelope_second_derivative: step must be > 0");
    return (f(z + h) - 2.0 * f(z) + f(z - h)) / (h * h);
}

// Trapezoid L2 norm^2 of the sampled envelope over [z_min, z_max].
inline double envelope_norm2(const Envelope& f, double z_min, double z_max, int n) {
    if (n < 2 || !(z_max > z_min)) throw config_error("envelope_norm2: bad range");
    const double dz = (z_max - z_min) / (n - 1);
    double acc = 0.0;
    for (int j = 0; j < n; ++j) {
        const double w = (j == 0 || j == n - 1) ? 0.5 : 1.0;
        acc += w * std::norm(f(z_min + j * dz));
    }
    return acc * dz;
}

}  // namespace photomol
