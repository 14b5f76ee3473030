#pragma once

// Drucker-Prager yield set, its support function (the plastic dissipation
// density), nearest-point projections, and the local incremental update
// ("return map") with kinematic hardening.
//
// The yield set in stress space is
//     K = { sigma : tau * mean(sigma) + |dev(sigma)| <= k },
// a cone around the hydrostatic axis with apex at (k/tau) Id.  Its support
// function is
//     H(xi) = (k/tau) tr(xi)   if  tau |dev(xi)| <= tr(xi),
//     H(xi) = +infinity        otherwise,
// so admissible plastic increments dilate: tr(dp) >= tau |dev(dp)| >= 0.
// The infinite branch is represented by an empty optional, never by NaN or
// an overflowed double.

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>

#include "errors.hpp"
#include "tensor.hpp"

namespace geoplast {

struct DruckerPrager {
    double tau = 0.0; // pressure sensitivity, > 0
    double k = 0.0;   // cohesion-like strength, > 0
    int dim = 3;
};

inline void validate_drucker_prager(const DruckerPrager& dp) {
    if (!(dp.tau > 0.0))
        throw std::invalid_argument("drucker_prager: tau must be > 0, got " + std::to_string(dp.tau));
    if (!(dp.k > 0.0))
        throw std::invalid_argument("drucker_prager: k must be > 0, got " + std::to_string(dp.k));
    if (dp.dim != 2 && dp.dim != 3)
        throw std::invalid_argument("drucker_prager: dim must be 2 or 3");
}

// tau * mean(sigma) + |dev(sigma)| - k,  <= 0 inside K
inline double yield_value(const DruckerPrager& dp, const SymTensor& sigma) {
    return dp.tau * sigma.mean() + sigma.deviator().norm() - dp.k;
}

inline bool in_K(const DruckerPrager& dp, const SymTensor& sigma, double tol = 0.0) {
    return yield_value(dp, sigma) <= tol;
}

// largest r with { |sigma| <= r } inside K; also the coercivity constant
// of H on its domain: H(xi) >= inradius * |xi| there
inline double inradius(const DruckerPrager& dp) {
    return dp.k / std::sqrt(dp.tau * dp.tau / dp.dim + 1.0);
}

inline double cone_violation(const DruckerPrager& dp, const SymTensor& xi) {
    const double v = dp.tau * xi.deviator().norm() - xi.trace();
    return v > 0.0 ? v : 0.0;
}

inline bool in_cone(const DruckerPrager& dp, const SymTensor& xi, double tol = 0.0) {
    return dp.tau * xi.deviator().norm() <= xi.trace() + tol;
}

// support function of K; empty optional encodes +infinity
inline std::optional<double> support(const DruckerPrager& dp, const SymTensor& xi,
                                     double cone_tol = 0.0) {
    if (!in_cone(dp, xi, cone_tol)) return std::nullopt;
    return dp.k / dp.tau * xi.trace();
}

// Nearest point of K in the Frobenius metric.  With x = mean(sigma),
// y = |dev(sigma)| the problem reduces to projecting (x, y) onto
// { tau x + y <= k, y >= 0 } under the metric n dx^2 + dy^2; the deviatoric
// direction is preserved.
inline SymTensor project_to_K(const DruckerPrager& dp, const SymTensor& sigma) {
    const int n = dp.dim;
    const auto [x0, dev] = split(sigma);
    const double y0 = dev.norm();
    const double excess = dp.tau * x0 + y0 - dp.k;
    if (excess <= 0.0) return sigma;
    const double lam = 2.0 * excess / (dp.tau * dp.tau / n + 1.0);
    double x = x0 - lam * dp.tau / (2.0 * n);
    double y = y0 - lam / 2.0;
    if (y < 0.0) { // below the apex: nearest point is hydrostatic
        y = 0.0;
        x = std::min(x0, dp.k / dp.tau);
    }
    SymTensor out = SymTensor::identity(n) * x;
    if (y > 0.0) out += dev * (y / y0);
    return out;
}

// Nearest point of dom H = { tau |dev| <= tr } in the Frobenius metric.
inline SymTensor project_to_cone(const DruckerPrager& dp, const SymTensor& xi) {
    const int n = dp.dim;
    const auto [x0, dev] = split(xi);
    const double y0 = dev.norm();
    if (dp.tau * y0 <= n * x0) return xi;
    const double y = (dp.tau * x0 + y0) / (dp.tau * dp.tau / n + 1.0);
    if (y <= 0.0) return SymTensor::zero(n);
    SymTensor out = SymTensor::identity(n) * (dp.tau * y / n);
    if (y0 > 0.0) out += dev * (y / y0);
    return out;
}

// 1/2 C(eps - q):(eps - q) + c1 q:q + H(q - p_prev); empty if the
// increment leaves dom H (infinite dissipation)
inline std::optional<double> local_incremental_energy(const DruckerPrager& dp,
                                                      const HookeParams& hooke, double c1,
                                                      const SymTensor& eps,
                                                      const SymTensor& p_prev,
                                                      const SymTensor& q,
                                                      double cone_tol = 0.0) {
    const auto h = support(dp, q - p_prev, cone_tol);
    if (!h) return std::nullopt;
    return elastic_density(hooke, eps - q) + c1 * q.dot(q) + *h;
}

enum class PlasticRegime { elastic = 0, cone_interior = 1, cone_boundary = 2 };

struct ReturnMapResult {
    SymTensor dp;        // plastic increment q - p_prev
    SymTensor p_new;     // q
    SymTensor sigma;     // C(eps - q)
    PlasticRegime regime = PlasticRegime::elastic;
    int iterations = 0;
    double scalar_residual = 0.0;
};

struct KktResiduals {
    double yield_excess = 0.0;   // positive part of yield at sigma - 2 c1 p_new
    double flow_gap = 0.0;       // |H(dp) - (sigma - 2 c1 p_new):dp|
    double cone_gap = 0.0;       // positive part of tau |dev dp| - tr dp
};

inline KktResiduals kkt_residuals(const DruckerPrager& dp_model, double c1,
                                  const ReturnMapResult& r) {
    KktResiduals out;
    const SymTensor eff = r.sigma - r.p_new * (2.0 * c1);
    const double y = yield_value(dp_model, eff);
    out.yield_excess = y > 0.0 ? y : 0.0;
    out.flow_gap = std::abs(dp_model.k / dp_model.tau * r.dp.trace() - eff.dot(r.dp));
    out.cone_gap = cone_violation(dp_model, r.dp);
    return out;
}

namespace detail {

// Writing dp = x Id + y N with a frozen unit deviator N, the boundary
// branch tau y = n x of the local problem has the stationarity equation
//     psi'(y) = -tau kap (a - tau y/n) + 2 c1 tau (pi + tau y/n) + k
//               + 2 (mu + c1) (y - g) = 0
// with kap = n lambda + 2 mu, a/pi the mean parts of the trial elastic
// strain and of p_prev, and g the magnitude of the combined deviatoric
// drive.  psi is strictly convex; the safeguarded Newton below brackets
// the root and falls back to bisection if an iterate escapes.
struct BoundaryScalar {
    double tau, n, kap, c1, k, mu, a, pi, g;
    double slope() const {
        return tau * tau * (kap + 2.0 * c1) / n + 2.0 * (mu + c1);
    }
    double operator()(double y) const {
        return -tau * kap * (a - tau * y / n) + 2.0 * c1 * tau * (pi + tau * y / n) + k +
               2.0 * (mu + c1) * (y - g);
    }
};

inline double solve_boundary_scalar(const BoundaryScalar& f, int max_iter, double rtol,
                                    int* iters_out, double* residual_out) {
    const double scale = std::max({f.k, std::abs(f(0.0)), 1e-300});
    double lo = 0.0, hi = 1.0;
    int guard = 0;
    while (f(hi) < 0.0) {
        hi *= 2.0;
        if (++guard > 200)
            throw SolverError("return_map: failed to bracket cone-boundary root", f(hi));
    }
    double y = 0.5 * (lo + hi);
    double res = f(y);
    int it = 0;
    while (std::abs(res) > rtol * scale) {
        if (++it > max_iter)
            throw SolverError("return_map: cone-boundary solve did not converge", std::abs(res));
        if (res > 0.0) hi = y; else lo = y;
        double ynext = y - res / f.slope();
        if (!(ynext > lo && ynext < hi)) ynext = 0.5 * (lo + hi);
        y = ynext;
        res = f(y);
    }
    *iters_out = it;
    *residual_out = std::abs(res);
    return y;
}

// Nudge the mean part up by a few ulps so that tau |dev| <= tr survives
// re-evaluation in the verifier's arithmetic.  A verifier reconstructs the
// increment as (p_prev + delta) - p_prev, which carries cancellation noise of
// order eps * |p_prev| on top of the noise proportional to delta itself, so
// the margin has to scale with the state, not only with the increment.
inline SymTensor snap_to_cone(const DruckerPrager& dp, const SymTensor& delta,
                              double state_scale = 0.0) {
    const auto [m, dev] = split(delta);
    const double dn = dev.norm();
    if (m == 0.0 && dn == 0.0) return delta;
    const double eps = std::numeric_limits<double>::epsilon();
    const double m_min = dp.tau * dn / dp.dim + eps * (8.0 * dn + 16.0 * state_scale);
    if (m >= m_min) return delta;
    return SymTensor::identity(dp.dim) * m_min + dev;
}

} // namespace detail

// Minimizer of q -> 1/2 C(eps - q):(eps - q) + c1 q:q + H(q - p_prev).
// The problem is strictly convex; splitting into mean/deviator parts gives
// three regimes:
//   elastic        sigma_trial - 2 c1 p_prev in K, dp = 0
//   cone_interior  stationarity with the apex normal (k/tau) Id; linear in
//                  the mean part, deviator matches the combined drive
//   cone_boundary  tau |dev dp| = tr dp; scalar solve along the frozen
//                  deviatoric direction (valid since C is isotropic and the
//                  hardening coefficient is scalar)
inline ReturnMapResult return_map(const DruckerPrager& dp_model, const HookeParams& hooke,
                                  double c1, const SymTensor& eps, const SymTensor& p_prev,
                                  int max_iter = 100, double rtol = 1e-12) {
    const int n = dp_model.dim;
    const double tau = dp_model.tau, k = dp_model.k;
    const double kap = n * hooke.lambda + 2.0 * hooke.mu;

    ReturnMapResult out;
    out.dp = SymTensor::zero(n);

    const SymTensor e_tr = eps - p_prev;
    const SymTensor sigma_tr = hooke_apply(hooke, e_tr);
    const SymTensor shifted = sigma_tr - p_prev * (2.0 * c1);
    if (yield_value(dp_model, shifted) <= 0.0) {
        out.p_new = p_prev;
        out.sigma = sigma_tr;
        return out;
    }

    const auto [a, E] = split(e_tr);
    const auto [pi, P] = split(p_prev);
    const SymTensor G = (E * hooke.mu - P * c1) * (1.0 / (hooke.mu + c1));
    const double g = G.norm();

    const double x_int = (kap * a - 2.0 * c1 * pi - k / tau) / (kap + 2.0 * c1);
    SymTensor delta(n);
    if (tau * g <= n * x_int) {
        out.regime = PlasticRegime::cone_interior;
        delta = SymTensor::identity(n) * x_int;
        if (g > 0.0) delta += G;
    } else {
        detail::BoundaryScalar f{tau, double(n), kap, c1, k, hooke.mu, a, pi, g};
        if (f(0.0) >= 0.0) { // borderline: apex optimal after all
            out.p_new = p_prev;
            out.sigma = sigma_tr;
            return out;
        }
        out.regime = PlasticRegime::cone_boundary;
        const double y =
            detail::solve_boundary_scalar(f, max_iter, rtol, &out.iterations, &out.scalar_residual);
        delta = SymTensor::identity(n) * (tau * y / n);
        if (g > 0.0) delta += G * (y / g);
    }
    delta = detail::snap_to_cone(dp_model, delta, p_prev.norm());

    out.dp = delta;
    out.p_new = p_prev + delta;
    out.sigma = hooke_apply(hooke, e_tr - delta);
#ifndef NDEBUG
    {
        const KktResiduals kr = kkt_residuals(dp_model, c1, out);
        const double dscale = std::max(1.0, delta.norm());
        assert(kr.yield_excess <= 1e-8 * k * dscale);
        assert(kr.flow_gap <= 1e-8 * k * dscale * dscale);
        assert(kr.cone_gap <= 1e-10 * dscale);
    }
#endif
    return out;
}

} // namespace geoplast
