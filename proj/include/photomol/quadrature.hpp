#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "photomol/errors.hpp"

namespace photomol {

struct QuadratureOptions {
    double rel_tol = 1.0e-10;
    double abs_floor = 0.0;  // below this the interval is accepted regardless
    int max_depth = 52;
};

namespace detail {

// Adaptive Simpson with Richardson extrapolation. f must be finite on [a,b].
template <class F>
double simpson_rec(const F& f, double a, double b, double fa, double fm, double fb,
                   double whole, double tol, double abs_floor, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double h6 = (b - a) / 12.0;
    const double left = h6 * (fa + 4.0 * flm + fm);
    const double right = h6 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (!std::isfinite(delta))
        throw numerical_error("quadrature: non-finite integrand");
    if (std::abs(delta) <= 15.0 * tol || std::abs(delta) <= 15.0 * abs_floor)
        return left + right + delta / 15.0;
    if (depth <= 0)
        throw numerical_error("quadrature: no convergence (max depth reached)");
    return simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, abs_floor, depth - 1) +
           simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, abs_floor, depth - 1);
}

}  // namespace detail

template <class F>
double integrate_adaptive(const F& f, double a, double b, QuadratureOptions opt = {}) {
    if (a == b) return 0.0;
    const double fa = f(a);
    const double fm = f(0.5 * (a + b));
    const double fb = f(b);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    // Seed the tolerance from a coarse magnitude estimate; the recursion
    // halves it per split, which keeps the global error near rel_tol.
    const double scale = std::max({std::abs(whole), std::abs(b - a) * std::abs(fm), 1e-300});
    const double tol = opt.rel_tol * scale;
    return detail::simpson_rec(f, a, b, fa, fm, fb, whole, tol, opt.abs_floor, opt.max_depth);
}

// Integrate splitting at interior breakpoints (kinks of piecewise schedules).
template <class F>
double integrate_adaptive_split(const F& f, double a, double b,
                                std::vector<double> breaks, QuadratureOptions opt = {}) {
    if (a == b) return 0.0;
    const double lo = std::min(a, b), hi = std::max(a, b);
    breaks.erase(std::remove_if(breaks.begin(), breaks.end(),
                                [&](double x) { return !(x > lo && x < hi); }),
                 breaks.end());
    std::sort(breaks.begin(), breaks.end());
    double acc = 0.0;
    double left = lo;
    for (double x : breaks) {
        acc += integrate_adaptive(f, left, x, opt);
        left = x;
    }
    acc += integrate_adaptive(f, left, hi, opt);
    return (b >= a) ? acc : -acc;
}

}  // namespace photomol
