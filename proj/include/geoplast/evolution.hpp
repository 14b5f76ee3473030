#pragma once

// Quasistatic evolution by time-incremental energy minimization.  At each
// step of the uniform grid we minimize
//
//   Q(e) + D(alpha) + w_grad |grad alpha|^2 + Qtilde(alpha, p)
//     + H(p - p_prev) - <L(t), u>
//
// over kinematically admissible (u, e, p) and 0 <= alpha <= alpha_prev,
// by alternating two convex block solves:
//   uep_step     u (hence e, p elementwise via the return map), alpha frozen
//   alpha_step   damage with p frozen
// warm started from the transported previous state (u + dw, e + E dw, p,
// alpha), which makes the incremental objective non-increasing across
// sweeps by construction.
//
// The ledger tracks every term of the energy-dissipation balance so that
// the verification pass can test it without re-running the solver.

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "damage.hpp"
#include "drucker_prager.hpp"
#include "errors.hpp"
#include "fem.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "tensor.hpp"

namespace geoplast {

struct SolverParams {
    double tol_altmin = 1e-10;
    int max_sweeps = 2000;
    double tol_uep = 1e-10;
    int max_uep_iters = 5000;
    double tol_alpha = 1e-10;
    int max_alpha_iters = 2000;
    double tol_alpha_sweep = 1e-8; // max damage change between the last two sweeps
    int multi_start = 0;           // extra randomized damage warm starts per step
    std::uint64_t seed = 1234;
    double cone_tol = 1e-9; // relative dilatancy-cone tolerance in H
};

struct Loading {
    std::function<VecX(double)> load;     // <L(t), .> as a dof vector
    std::function<VecX(double)> boundary; // nodal Dirichlet datum w(t)
};

struct Problem {
    const Discretization* disc = nullptr;
    HookeParams hooke;
    DruckerPrager dp;
    DamageLaw law;
    Loading loading;
    int time_steps = 1;
    double horizon = 1.0;
    std::vector<double> alpha0;
    std::vector<SymTensor> p0;
    SolverParams solver;
};

struct StateSnapshot {
    double t = 0.0;
    VecX u;
    std::vector<SymTensor> e, p, sigma;
    std::vector<double> alpha;
};

struct EnergyParts {
    double Q = 0.0;      // elastic energy
    double D = 0.0;      // damage dissipation potential
    double grad = 0.0;   // gradient regularization
    double Qtilde = 0.0; // kinematic hardening
    double total() const { return Q + D + grad + Qtilde; }
};

inline EnergyParts total_energy(const Discretization& disc, const HookeParams& hooke,
                                const DamageLaw& law, const std::vector<SymTensor>& e,
                                const std::vector<SymTensor>& p,
                                const std::vector<double>& alpha) {
    EnergyParts out;
    for (int el = 0; el < disc.n_elements(); ++el) {
        const double w = disc.mesh().measures[el];
        const double ab = disc.element_average(alpha, el);
        out.Q += w * elastic_density(hooke, e[el]);
        out.D += w * damage_density(law, ab);
        out.grad += law.w_grad * w * disc.alpha_grad_sq(alpha, el);
        out.Qtilde += w * c1_eval(law, ab) * p[el].dot(p[el]);
    }
    return out;
}

// sum_e |e| H(p_new - p_old); throws if an increment leaves the dilatancy
// cone beyond the scaled tolerance (finite dissipation is an invariant of
// solver-produced increments)
inline double dissipation_increment(const Discretization& disc, const DruckerPrager& dp,
                                    const std::vector<SymTensor>& p_new,
                                    const std::vector<SymTensor>& p_old, double cone_tol) {
    double s = 0.0;
    for (int el = 0; el < disc.n_elements(); ++el) {
        const SymTensor d = p_new[el] - p_old[el];
        const auto h = support(dp, d, cone_tol * (d.norm() + 1e-30));
        if (!h)
            throw SolverError("dissipation: plastic increment outside the dilatancy cone",
                              cone_violation(dp, d));
        s += disc.mesh().measures[el] * *h;
    }
    return s;
}

struct UepResult {
    VecX u;
    std::vector<SymTensor> e, p, sigma;
    int iterations = 0;
    double grad_norm = 0.0;
    double objective = 0.0; // energy + dissipation - load work at the minimizer
};

// Shared per-run context: the elastic stiffness restricted to free dofs is
// the (fixed) line-search metric for the displacement block.
class UepSolver {
public:
    UepSolver(const Discretization& disc, const HookeParams& hooke, const DruckerPrager& dp)
        : disc_(disc), hooke_(hooke), dp_(dp) {
        const auto& free = disc.free_dofs();
        const MatX K = disc.stiffness(hooke);
        MatX Kff(free.size(), free.size());
        for (size_t a = 0; a < free.size(); ++a)
            for (size_t b = 0; b < free.size(); ++b) Kff(a, b) = K(free[a], free[b]);
        if (!free.empty()) {
            llt_.compute(Kff);
            if (llt_.info() != Eigen::Success)
                throw SolverError("uep: elastic stiffness is not positive definite");
        }
    }

    // c1 per element; u_start carries the boundary values on Dirichlet dofs
    UepResult solve(const std::vector<double>& c1, const std::vector<SymTensor>& p_prev,
                    const VecX& u_start, const VecX& F, const SolverParams& sp) const {
        const DruckerPrager& dpm = dp_;
        const int ne = disc_.n_elements();
        UepResult r;
        r.u = u_start;
        r.e.resize(ne, SymTensor(disc_.tensor_dim()));
        r.p.resize(ne, SymTensor(disc_.tensor_dim()));
        r.sigma.resize(ne, SymTensor(disc_.tensor_dim()));

        // reduced objective and stress via elementwise return maps; abs_scale
        // collects the magnitude of the summands (all element terms are >= 0,
        // only the load term can cancel), which bounds the rounding noise of J
        const auto evaluate = [&](const VecX& u, std::vector<SymTensor>* sig,
                                  double* abs_scale = nullptr) {
            std::vector<double> part(ne);
            std::vector<SymTensor> loc(ne, SymTensor(disc_.tensor_dim()));
            parallel_for(ne, [&](int el) {
                const SymTensor eps = disc_.strain(u, el);
                const ReturnMapResult rm = return_map(dpm, hooke_, c1[el], eps, p_prev[el]);
                double v = elastic_density(hooke_, eps - rm.p_new) +
                           c1[el] * rm.p_new.dot(rm.p_new) +
                           dpm.k / dpm.tau * rm.dp.trace();
                part[el] = disc_.mesh().measures[el] * v;
                loc[el] = rm.sigma;
            });
            double J = 0.0;
            for (int el = 0; el < ne; ++el) J += part[el];
            if (sig) *sig = std::move(loc);
            const double load = F.dot(u);
            if (abs_scale) *abs_scale = J + std::abs(load);
            return J - load;
        };

        const auto& free = disc_.free_dofs();
        std::vector<SymTensor> sigma(ne, SymTensor(disc_.tensor_dim()));
        double J = evaluate(r.u, &sigma);
        const double J_start = J;

        if (!free.empty()) {
            VecX g_free(free.size()), d_free(free.size());
            const auto reduced_gradient = [&]() {
                const VecX g = disc_.internal_force(sigma) - F;
                for (size_t a = 0; a < free.size(); ++a) g_free[a] = g[free[a]];
                return g_free.lpNorm<Eigen::Infinity>();
            };
            double gnorm = reduced_gradient();
            const double scale =
                1.0 + F.lpNorm<Eigen::Infinity>() + disc_.internal_force(sigma).lpNorm<Eigen::Infinity>();
            int it = 0;
            int stagnant = 0;
            while (gnorm > sp.tol_uep * scale) {
                if (++it > sp.max_uep_iters)
                    throw SolverError("uep: no convergence after max iterations", gnorm);
                d_free = llt_.solve(-g_free);
                const double slope = g_free.dot(d_free); // < 0
                const double J_before = J;
                double step = 1.0;
                bool accepted = false;
                VecX u_trial = r.u;
                for (int ls = 0; ls < 64 && !accepted; ++ls) {
                    for (size_t a = 0; a < free.size(); ++a)
                        u_trial[free[a]] = r.u[free[a]] + step * d_free[a];
                    const double Jt = evaluate(u_trial, nullptr);
                    if (Jt <= J + 1e-4 * step * slope) {
                        r.u = u_trial;
                        J = Jt;
                        accepted = true;
                    } else {
                        step *= 0.5;
                    }
                }
                // the objective is convex and the direction is a descent
                // direction, so failure to decrease -- or decreases smaller
                // than the evaluation rounding noise -- means the iterate is
                // already optimal to working precision, even when the
                // requested gradient tolerance is below what doubles resolve
                double noise = 0.0;
                J = evaluate(r.u, &sigma, &noise);
                gnorm = reduced_gradient();
                const double floor = 4.0 * std::numeric_limits<double>::epsilon() * noise;
                if (!accepted || J_before - J <= floor) {
                    if (!accepted && gnorm > 1e-6 * scale)
                        throw SolverError("uep: line search failed", gnorm);
                    if (++stagnant >= 2) break;
                } else {
                    stagnant = 0;
                }
            }
            r.iterations = it;
            r.grad_norm = gnorm;
        }

        if (J > J_start + 1e-12 * (1.0 + std::abs(J_start)))
            throw SolverError("uep: objective increased from the warm start", J - J_start);

        // final elementwise state at the converged displacement
        for (int el = 0; el < ne; ++el) {
            const SymTensor eps = disc_.strain(r.u, el);
            const ReturnMapResult rm = return_map(dpm, hooke_, c1[el], eps, p_prev[el]);
            r.p[el] = rm.p_new;
            r.e[el] = eps - rm.p_new;
            r.sigma[el] = rm.sigma;
        }
        r.objective = J;
        return r;
    }

private:
    const Discretization& disc_;
    HookeParams hooke_;
    DruckerPrager dp_;
    Eigen::LLT<MatX> llt_;
};

struct LedgerRow {
    double t = 0.0;
    double Q = 0.0, D = 0.0, grad = 0.0, Qtilde = 0.0;
    double VH_cum = 0.0;
    double work_sigma_cum = 0.0; // int <sigma, E wdot>
    double work_load_cum = 0.0;  // int <Ldot, u> + <L, wdot>
    double load_term = 0.0;      // <L(t), u(t)>
    double energy_residual = 0.0;
    double strain_incr_norm = 0.0; // ||E(w_i - w_{i-1})||_{L2}
    double flow_residual = 0.0;        // |H(dp) - (sigma - 2 c1 p):dp| max over elements
    double flow_residual_stress = 0.0; // |H(dp) - sigma:dp| max, reported for comparison
    double yield_residual = 0.0;       // positive part of yield(sigma - 2 c1 p) max
    double cone_residual = 0.0;        // positive part of tau|dev dp| - tr dp max
    int sweeps = 0;
    int uep_iterations = 0;
    int alpha_iterations = 0;
    double incremental_objective = 0.0;
};

struct Trajectory {
    std::vector<StateSnapshot> snapshots;
    std::vector<LedgerRow> ledger;
};

struct StepStats {
    int sweeps = 0;
    int uep_iterations = 0;
    int alpha_iterations = 0;
    double objective = 0.0;
};

namespace detail {

inline std::vector<double> element_c1(const Discretization& disc, const DamageLaw& law,
                                      const std::vector<double>& alpha) {
    std::vector<double> c1(disc.n_elements());
    for (int el = 0; el < disc.n_elements(); ++el)
        c1[el] = c1_eval(law, disc.element_average(alpha, el));
    return c1;
}

} // namespace detail

// one incremental minimization with warm start from the transported
// previous state; returns the final state and per-step solver statistics
inline StateSnapshot incremental_step(const Problem& pb, const UepSolver& uep,
                                      const StateSnapshot& prev, double t, int step_index,
                                      StepStats* stats) {
    const Discretization& disc = *pb.disc;
    const VecX w_new = pb.loading.boundary(t);
    const VecX w_prev = pb.loading.boundary(prev.t);
    const VecX F = pb.loading.load(t);

    const auto sweep_from = [&](const VecX& u0, const std::vector<double>& alpha0,
                                StepStats* st) -> StateSnapshot {
        StateSnapshot cur;
        cur.t = t;
        cur.u = u0;
        cur.alpha = alpha0;
        double objective_prev = std::numeric_limits<double>::infinity();
        UepResult ur;
        for (int sweep = 1;; ++sweep) {
            ur = uep.solve(detail::element_c1(disc, pb.law, cur.alpha), prev.p, cur.u, F,
                           pb.solver);
            cur.u = ur.u;
            const AlphaStepResult ar =
                alpha_step(disc, pb.law, ur.p, prev.alpha, pb.solver.max_alpha_iters,
                           pb.solver.tol_alpha, &cur.alpha);
            double alpha_change = 0.0;
            for (size_t i = 0; i < ar.alpha.size(); ++i)
                alpha_change = std::max(alpha_change, std::abs(ar.alpha[i] - cur.alpha[i]));
            cur.alpha = ar.alpha;
            const EnergyParts en = total_energy(disc, pb.hooke, pb.law, ur.e, ur.p, cur.alpha);
            const double diss =
                dissipation_increment(disc, pb.dp, ur.p, prev.p, pb.solver.cone_tol);
            const double objective = en.total() + diss - F.dot(cur.u);
            if (st) {
                st->sweeps = sweep;
                st->uep_iterations += ur.iterations;
                st->alpha_iterations += ar.iterations;
                st->objective = objective;
            }
            const double tol = pb.solver.tol_altmin * (1.0 + std::abs(objective));
            if (objective > objective_prev + tol)
                throw SolverError("alternating minimization: objective increased",
                                  objective - objective_prev);
            if (objective_prev - objective <= tol &&
                alpha_change <= pb.solver.tol_alpha_sweep)
                break;
            if (sweep >= pb.solver.max_sweeps)
                throw SolverError("alternating minimization: no convergence after max sweeps",
                                  objective_prev - objective);
            objective_prev = objective;
        }
        // the loop ends on a damage update, so re-solve the displacement block
        // once with the final field; the stored (u, e, p, sigma) then satisfy
        // the return-map optimality conditions for the damage that is stored
        // with them, not for the one from the previous half sweep
        ur = uep.solve(detail::element_c1(disc, pb.law, cur.alpha), prev.p, cur.u, F,
                       pb.solver);
        cur.u = ur.u;
        cur.e = ur.e;
        cur.p = ur.p;
        cur.sigma = ur.sigma;
        if (st) {
            st->uep_iterations += ur.iterations;
            const EnergyParts en = total_energy(disc, pb.hooke, pb.law, ur.e, ur.p, cur.alpha);
            st->objective = en.total() +
                            dissipation_increment(disc, pb.dp, ur.p, prev.p, pb.solver.cone_tol) -
                            F.dot(cur.u);
        }
        return cur;
    };

    // transported warm start
    VecX u_ws = prev.u + (w_new - w_prev);
    disc.apply_dirichlet(u_ws, w_new);

    StepStats st{};
    StateSnapshot best = sweep_from(u_ws, prev.alpha, &st);
    if (pb.solver.multi_start > 0) {
        const auto objective_of = [&](const StateSnapshot& s) {
            const EnergyParts en = total_energy(disc, pb.hooke, pb.law, s.e, s.p, s.alpha);
            return en.total() + dissipation_increment(disc, pb.dp, s.p, prev.p, pb.solver.cone_tol) -
                   F.dot(s.u);
        };
        double best_obj = objective_of(best);
        Rng rng(pb.solver.seed ^ (0x9e3779b97f4a7c15ull * (std::uint64_t)(step_index + 1)));
        for (int ms = 0; ms < pb.solver.multi_start; ++ms) {
            std::vector<double> a0 = prev.alpha;
            for (double& a : a0) a = std::clamp(a * (1.0 - 0.5 * rng.uniform()), 0.0, a);
            StepStats st2{};
            try {
                StateSnapshot cand = sweep_from(u_ws, a0, &st2);
                const double obj = objective_of(cand);
                st.sweeps += st2.sweeps;
                st.uep_iterations += st2.uep_iterations;
                st.alpha_iterations += st2.alpha_iterations;
                if (obj < best_obj - 0.0) {
                    best = std::move(cand);
                    best_obj = obj;
                    st.objective = obj;
                }
            } catch (const SolverError&) {
                // a failed extra start is not fatal; the primary start stands
            }
        }
    }
    if (stats) *stats = st;
    return best;
}

using StepObserver = std::function<void(const Trajectory&)>;

// full evolution on the uniform time grid; the observer (if any) runs
// after every accepted step so partial output can be persisted
inline Trajectory run_evolution(const Problem& pb, const StepObserver& observer = nullptr) {
    const Discretization& disc = *pb.disc;
    if (pb.time_steps < 1) throw ValidationError("evolution: time_steps must be >= 1");
    if (!(pb.horizon > 0.0)) throw ValidationError("evolution: horizon must be > 0");

    UepSolver uep(disc, pb.hooke, pb.dp);

    Trajectory traj;
    const auto record = [&](const StateSnapshot& s, const StepStats& st, bool initial) {
        LedgerRow row;
        row.t = s.t;
        const EnergyParts en = total_energy(disc, pb.hooke, pb.law, s.e, s.p, s.alpha);
        row.Q = en.Q;
        row.D = en.D;
        row.grad = en.grad;
        row.Qtilde = en.Qtilde;
        const VecX F = pb.loading.load(s.t);
        row.load_term = F.dot(s.u);
        row.sweeps = st.sweeps;
        row.uep_iterations = st.uep_iterations;
        row.alpha_iterations = st.alpha_iterations;
        row.incremental_objective = st.objective;

        if (!initial) {
            const LedgerRow& prev_row = traj.ledger.back();
            const StateSnapshot& prev = traj.snapshots.back();
            row.VH_cum = prev_row.VH_cum +
                         dissipation_increment(disc, pb.dp, s.p, prev.p, pb.solver.cone_tol);
            const VecX dw = pb.loading.boundary(s.t) - pb.loading.boundary(prev.t);
            row.strain_incr_norm = disc.strain_l2_norm(dw);
            const VecX F_prev = pb.loading.load(prev.t);
            double pair_prev = 0.0, pair_new = 0.0;
            for (int el = 0; el < disc.n_elements(); ++el) {
                const SymTensor dEw = disc.strain(dw, el);
                pair_prev += disc.mesh().measures[el] * prev.sigma[el].dot(dEw);
                pair_new += disc.mesh().measures[el] * s.sigma[el].dot(dEw);
            }
            row.work_sigma_cum = prev_row.work_sigma_cum + 0.5 * (pair_prev + pair_new);
            row.work_load_cum = prev_row.work_load_cum +
                                (F - F_prev).dot(0.5 * (prev.u + s.u)) +
                                0.5 * (F + F_prev).dot(dw);

            const std::vector<double> c1 = detail::element_c1(disc, pb.law, s.alpha);
            for (int el = 0; el < disc.n_elements(); ++el) {
                const SymTensor dpl = s.p[el] - prev.p[el];
                const SymTensor eff = s.sigma[el] - s.p[el] * (2.0 * c1[el]);
                const double h = pb.dp.k / pb.dp.tau * dpl.trace();
                row.flow_residual =
                    std::max(row.flow_residual, std::abs(h - eff.dot(dpl)));
                row.flow_residual_stress =
                    std::max(row.flow_residual_stress, std::abs(h - s.sigma[el].dot(dpl)));
                row.yield_residual =
                    std::max(row.yield_residual, std::max(0.0, yield_value(pb.dp, eff)));
                row.cone_residual = std::max(row.cone_residual, cone_violation(pb.dp, dpl));
            }
            const LedgerRow& r0 = traj.ledger.front();
            const double lhs = row.Q + row.D + row.grad + row.Qtilde + row.VH_cum - row.load_term;
            const double rhs = r0.Q + r0.D + r0.grad + r0.Qtilde - r0.load_term +
                               row.work_sigma_cum - row.work_load_cum;
            row.energy_residual = lhs - rhs;
        }
        traj.snapshots.push_back(s);
        traj.ledger.push_back(row);
        if (observer) observer(traj);
    };

    // initial state: minimize the t = 0 increment from the given data so
    // the reference state is admissible and block-stationary
    StateSnapshot init;
    init.t = 0.0;
    init.alpha = pb.alpha0;
    init.p = pb.p0;
    init.u = pb.loading.boundary(0.0);
    for (int d : disc.free_dofs()) init.u[d] = 0.0;
    init.e.assign(disc.n_elements(), SymTensor(disc.tensor_dim()));
    init.sigma.assign(disc.n_elements(), SymTensor(disc.tensor_dim()));
    StepStats st0{};
    StateSnapshot s0 = incremental_step(pb, uep, init, 0.0, 0, &st0);
    record(s0, st0, true);

    for (int i = 1; i <= pb.time_steps; ++i) {
        const double t = pb.horizon * i / pb.time_steps;
        StepStats st{};
        StateSnapshot s = incremental_step(pb, uep, traj.snapshots.back(), t, i, &st);
        // irreversibility is exact: the damage box is [0, alpha_prev]
        for (size_t nd = 0; nd < s.alpha.size(); ++nd)
            if (s.alpha[nd] > traj.snapshots.back().alpha[nd])
                throw SolverError("evolution: damage increased at a node");
        record(s, st, false);
    }
    return traj;
}

} // namespace geoplast
