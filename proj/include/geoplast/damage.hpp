#pragma once

// Damage state and its two constitutive laws.  alpha = 1 is sound
// material, alpha = 0 fully damaged, and alpha never increases in time.
//
//   hardening coupling   c1(alpha) = c_bar * ab / (1 - ab),  ab = min(alpha, alpha_cap)
//   dissipated density   d(alpha)  = w_d * (1 - alpha)
//
// c1 vanishes only at alpha = 0, grows without bound as alpha -> 1, and
// the cap keeps it finite (and the damage objective convex) on the
// feasible box: scenario validation clamps initial alpha to alpha_cap, so
// every later iterate satisfies alpha <= alpha_cap.

#include <cmath>
#include <vector>

#include "box_min.hpp"
#include "errors.hpp"
#include "fem.hpp"
#include "tensor.hpp"

namespace geoplast {

struct DamageLaw {
    double c_bar = 1.0;     // hardening scale, > 0
    double w_d = 1.0;       // damage dissipation weight, > 0
    double w_grad = 0.0;    // gradient regularization weight, >= 0
    double alpha_cap = 1.0 - 1e-6;
};

inline void validate_damage(const DamageLaw& law) {
    if (!(law.c_bar > 0.0)) throw std::invalid_argument("damage: c_bar must be > 0");
    if (!(law.w_d > 0.0)) throw std::invalid_argument("damage: w_d must be > 0");
    if (!(law.w_grad >= 0.0)) throw std::invalid_argument("damage: w_grad must be >= 0");
    if (!(law.alpha_cap > 0.0 && law.alpha_cap < 1.0))
        throw std::invalid_argument("damage: alpha_cap must lie in (0, 1)");
}

inline double c1_eval(const DamageLaw& law, double alpha) {
    const double ab = std::min(alpha, law.alpha_cap);
    return law.c_bar * ab / (1.0 - ab);
}

// derivative of c1; zero beyond the cap, consistent with the clamp
inline double c1_deriv(const DamageLaw& law, double alpha) {
    if (alpha > law.alpha_cap) return 0.0;
    const double om = 1.0 - alpha;
    return law.c_bar / (om * om);
}

inline double damage_density(const DamageLaw& law, double alpha) {
    return law.w_d * (1.0 - alpha);
}

// J(alpha) = int d(alpha) + w_grad |grad alpha|^2 + int c1(alpha) |p|^2,
// with c1 and d evaluated at element averages (exact for the linear d)
inline double alpha_objective(const Discretization& disc, const DamageLaw& law,
                              const std::vector<SymTensor>& p, const std::vector<double>& alpha) {
    double J = 0.0;
    for (int e = 0; e < disc.n_elements(); ++e) {
        const double w = disc.mesh().measures[e];
        const double ab = disc.element_average(alpha, e);
        J += w * (damage_density(law, ab) + c1_eval(law, ab) * p[e].dot(p[e]));
        J += law.w_grad * w * disc.alpha_grad_sq(alpha, e);
    }
    return J;
}

inline void alpha_gradient(const Discretization& disc, const DamageLaw& law,
                           const std::vector<SymTensor>& p, const std::vector<double>& alpha,
                           std::vector<double>& grad) {
    grad.assign(alpha.size(), 0.0);
    const Mesh& m = disc.mesh();
    for (int e = 0; e < disc.n_elements(); ++e) {
        const double w = m.measures[e];
        const double ab = disc.element_average(alpha, e);
        const double density = -law.w_d + c1_deriv(law, ab) * p[e].dot(p[e]);
        if (m.kind == MeshKind::point) {
            grad[0] += w * density;
            continue;
        }
        const double share = w * density / m.verts_per_elem;
        double gx = 0.0, gy = 0.0;
        for (int v = 0; v < m.verts_per_elem; ++v) {
            gx += alpha[m.elements[e][v]] * m.shape_grads[e][v][0];
            gy += alpha[m.elements[e][v]] * m.shape_grads[e][v][1];
        }
        for (int v = 0; v < m.verts_per_elem; ++v) {
            const int node = m.elements[e][v];
            grad[node] += share;
            grad[node] += 2.0 * law.w_grad * w *
                          (gx * m.shape_grads[e][v][0] + gy * m.shape_grads[e][v][1]);
        }
    }
}

struct AlphaStepResult {
    std::vector<double> alpha;
    int iterations = 0;
    double pg_residual = 0.0;
    double objective = 0.0;
};

// minimize J over the box 0 <= alpha <= alpha_prev (irreversibility);
// warm started at alpha_prev, so the result never increases anywhere
// The box is [0, alpha_prev] nodewise (irreversibility against the previous
// time step); `start`, when given, seeds the descent from a better point,
// e.g. the previous sweep of an alternating solve.  It must lie in the box.
inline AlphaStepResult alpha_step(const Discretization& disc, const DamageLaw& law,
                                  const std::vector<SymTensor>& p,
                                  const std::vector<double>& alpha_prev, int max_iter = 2000,
                                  double tol = 1e-10,
                                  const std::vector<double>* start = nullptr) {
    AlphaStepResult out;
    out.alpha = start ? *start : alpha_prev;
    const std::vector<double> lo(alpha_prev.size(), 0.0);
    const auto value = [&](const std::vector<double>& a) {
        return alpha_objective(disc, law, p, a);
    };
    std::vector<double> scratch;
    const auto grad = [&](const std::vector<double>& a, std::vector<double>& g) {
        alpha_gradient(disc, law, p, a, g);
    };
    // Scale the tolerance by the initial projected-gradient displacement,
    // which is bounded by the box width (so by 1); scaling by the raw
    // gradient norm would blow up when the warm start sits at the cap,
    // where c1' ~ (1 - alpha_cap)^-2.
    std::vector<double> g0;
    alpha_gradient(disc, law, p, out.alpha, g0);
    const double pg0 = pg_residual_inf(out.alpha, g0, lo, alpha_prev);
    const BoxMinResult r =
        minimize_box(out.alpha, lo, alpha_prev, value, grad, max_iter, tol * (1.0 + pg0));
    out.iterations = r.iterations;
    out.pg_residual = r.pg_residual;
    out.objective = r.value;
    return out;
}

// closed form for a single material point without gradient term:
// stationarity -w_d + c1'(alpha) |p|^2 = 0
inline double alpha_closed_form_point(const DamageLaw& law, double p_norm, double alpha_prev) {
    const double a = 1.0 - p_norm * std::sqrt(law.c_bar / law.w_d);
    return std::clamp(a, 0.0, alpha_prev);
}

} // namespace geoplast
