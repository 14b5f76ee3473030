#pragma once

// A-posteriori certification of a stored trajectory:
//   - irreversibility: damage nonincreasing nodewise (exact comparisons)
//   - global stability: sampled competitor states -- a necessary check
//     only, never sufficient, since the competitor set is infinite
//   - energy-dissipation balance from the ledger columns, with the
//     time-discretization slack bound gamma2 * (max step strain incr) *
//     (cumulative strain incr)
//   - per-step flow rule / yield inclusion / dilatancy-cone residuals,
//     recomputed from the snapshots (independently of the solver's ledger)
//   - optional safe-load certificate: exact ball inclusion margin and
//     discrete equilibrium of the scenario's admissible stress field
//
// Every check is deterministic given its seed; margins and residuals are
// the primary outputs, pass/fail is derived from pinned tolerances.

#include <json.hpp>

#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "evolution.hpp"
#include "io.hpp"
#include "rng.hpp"
#include "scenario.hpp"

namespace geoplast {

inline constexpr const char* kVerifySchema = "geoplast-verify-1";
inline constexpr const char* kStabilityCaveat =
    "sampled stability is a necessary check only, never a sufficient one: "
    "the competitor set is infinite and only finitely many are tried";

// ---------------------------------------------------------------------------
// stability

struct StabilityOptions {
    int n_samples = 1000;
    std::uint64_t seed = 4321;
    double tol = 0.0;      // absolute margin tolerance; <= 0 means report-only
    double d_offset = 0.0; // constant added to the damage dissipation density
                           // (cancels exactly in margins; exposed for tests)
};

struct StabilityRecord {
    double margin = 0.0; // min over samples of competitor value - state value
    double trivial_margin = 0.0; // competitor == state; identically zero
    int n_samples = 0;
    int worst_sample = -1;
    double tol = 0.0;
    bool pass = true;
};

namespace detail {

// energy of an admissible triple at fixed load: Q(eta) + D(beta) + grad +
// Qtilde(beta, q) - <F, v>, with an optional constant shift of d
inline double stability_value(const Discretization& disc, const HookeParams& hooke,
                              const DamageLaw& law, const std::vector<SymTensor>& eta,
                              const std::vector<SymTensor>& q, const std::vector<double>& beta,
                              const VecX& v, const VecX& F, double d_offset) {
    const EnergyParts en = total_energy(disc, hooke, law, eta, q, beta);
    return en.total() + d_offset * disc.mesh().volume() - F.dot(v);
}

// a random direction in the dilatancy cone with a strict trace margin, so
// H stays finite under roundoff
inline SymTensor cone_direction(Rng& rng, const DruckerPrager& dp, int dim) {
    const SymTensor dev = rng.deviatoric_direction(dim);
    const double r = rng.uniform(0.0, 1.0);
    const double tr = dp.tau * r * (1.01 + rng.uniform());
    return SymTensor::identity(dim) * (tr / dim) + dev * r;
}

} // namespace detail

// Samples competitor states (beta, v, eta, q) against snapshot (alpha, u,
// e, p): beta = alpha * (1 - amplitude * bump(x)), v = u + s * dv with dv
// vanishing on Dirichlet dofs, q = p + s * dq with dq in the dilatancy
// cone, eta = E v - q.  Sample 0 is the state itself (margin exactly 0).
inline StabilityRecord check_stability(const Discretization& disc, const HookeParams& hooke,
                                       const DruckerPrager& dp, const DamageLaw& law,
                                       const StateSnapshot& snap, const VecX& F,
                                       const StabilityOptions& opt) {
    StabilityRecord rec;
    rec.n_samples = opt.n_samples;
    rec.tol = opt.tol;

    const double lhs = detail::stability_value(disc, hooke, law, snap.e, snap.p, snap.alpha,
                                               snap.u, F, opt.d_offset);

    // trivial competitor: H(0) = 0, so the margin is exactly the value gap
    rec.trivial_margin = detail::stability_value(disc, hooke, law, snap.e, snap.p, snap.alpha,
                                                 snap.u, F, opt.d_offset) -
                         lhs;
    rec.margin = rec.trivial_margin;
    rec.worst_sample = 0;

    // domain bounding box for smooth damage bumps
    double xmin = 0.0, xmax = 0.0, ymin = 0.0, ymax = 0.0;
    for (const auto& v : disc.mesh().vertices) {
        xmin = std::min(xmin, v[0]);
        xmax = std::max(xmax, v[0]);
        ymin = std::min(ymin, v[1]);
        ymax = std::max(ymax, v[1]);
    }
    const double diam = std::max({xmax - xmin, ymax - ymin, 1.0});

    double state_scale = 1e-3;
    for (const auto& pe : snap.p) state_scale = std::max(state_scale, pe.norm());
    for (const auto& ee : snap.e) state_scale = std::max(state_scale, ee.norm());

    Rng rng(opt.seed);
    const int ne = disc.n_elements();
    std::vector<SymTensor> q(ne, SymTensor(disc.tensor_dim()));
    std::vector<SymTensor> eta(ne, SymTensor(disc.tensor_dim()));
    std::vector<double> beta(snap.alpha.size());
    VecX v(disc.n_dofs());

    for (int s = 1; s < opt.n_samples; ++s) {
        const int kind = s % 4; // 0: beta only, 1: q only, 2: v only, 3: all
        const double amp = std::pow(10.0, rng.uniform(-4.0, 0.0));

        beta = snap.alpha;
        if (kind == 0 || kind == 3) {
            const double cx = rng.uniform(xmin, xmax > xmin ? xmax : xmin + 1.0);
            const double cy = rng.uniform(ymin, ymax > ymin ? ymax : ymin + 1.0);
            const double len = rng.uniform(0.05, 1.0) * diam;
            const double u01 = rng.uniform();
            for (size_t nd = 0; nd < beta.size(); ++nd) {
                const auto& x = disc.mesh().vertices[nd];
                const double dx = x[0] - cx, dy = x[1] - cy;
                const double bump = std::exp(-(dx * dx + dy * dy) / (len * len));
                beta[nd] = std::clamp(snap.alpha[nd] * (1.0 - amp * u01 * bump), 0.0,
                                      snap.alpha[nd]);
            }
        }

        v = snap.u;
        if (kind == 2 || kind == 3) {
            const double sv = amp * state_scale * diam;
            for (int d : disc.free_dofs()) v[d] += sv * rng.uniform(-1.0, 1.0);
        }

        double diss = 0.0;
        for (int el = 0; el < ne; ++el) q[el] = snap.p[el];
        if (kind == 1 || kind == 3) {
            const double sq = amp * state_scale;
            for (int el = 0; el < ne; ++el) {
                if (rng.uniform() < 0.3) continue; // leave some elements alone
                const SymTensor dq = detail::cone_direction(rng, dp, disc.tensor_dim()) * sq;
                q[el] += dq;
                diss += disc.mesh().measures[el] * (dp.k / dp.tau) * dq.trace();
            }
        }

        for (int el = 0; el < ne; ++el) eta[el] = disc.strain(v, el) - q[el];

        const double val =
            detail::stability_value(disc, hooke, law, eta, q, beta, v, F, opt.d_offset);
        const double margin = val + diss - lhs;
        if (margin < rec.margin) {
            rec.margin = margin;
            rec.worst_sample = s;
        }
    }
    rec.pass = opt.tol <= 0.0 || rec.margin >= -opt.tol;
    return rec;
}

// ---------------------------------------------------------------------------
// energy balance

struct EnergyCheckRow {
    double t = 0.0;
    double residual = 0.0;
    double bound = 0.0;
    bool pass = true;
};

struct EnergyCheck {
    std::vector<EnergyCheckRow> rows;
    double max_residual = 0.0;
    bool pass = true;
};

// residual(t_i) recomputed from the ledger columns; the discretization
// slack bound uses gamma2 and the per-step strain-increment column
inline EnergyCheck check_energy_balance(const std::vector<LedgerRow>& ledger, double gamma2,
                                        double tol) {
    if (ledger.empty()) throw ValidationError("energy check: empty ledger");
    EnergyCheck out;
    const LedgerRow& r0 = ledger.front();
    const double ref = r0.Q + r0.D + r0.grad + r0.Qtilde - r0.load_term;
    double max_incr = 0.0, cum_incr = 0.0;
    for (size_t i = 0; i < ledger.size(); ++i) {
        const LedgerRow& r = ledger[i];
        EnergyCheckRow row;
        row.t = r.t;
        if (i > 0) {
            max_incr = std::max(max_incr, r.strain_incr_norm);
            cum_incr += r.strain_incr_norm;
        }
        const double lhs = r.Q + r.D + r.grad + r.Qtilde + r.VH_cum - r.load_term;
        const double rhs = ref + r.work_sigma_cum - r.work_load_cum;
        row.residual = lhs - rhs;
        row.bound = tol + gamma2 * max_incr * cum_incr;
        row.pass = std::abs(row.residual) <= row.bound;
        out.max_residual = std::max(out.max_residual, std::abs(row.residual));
        out.pass = out.pass && row.pass;
        out.rows.push_back(row);
    }
    return out;
}

// ---------------------------------------------------------------------------
// flow rule, yield inclusion, dilatancy cone

struct FlowCheck {
    double flow_residual = 0.0;  // max |H(dp) - (sigma - 2 c1 p):dp|
    double yield_residual = 0.0; // max positive part of yield(sigma - 2 c1 p)
    double cone_residual = 0.0;  // max positive part of tau|dev dp| - tr dp
};

inline FlowCheck check_flow_rule(const Discretization& disc, const DruckerPrager& dp,
                                 const DamageLaw& law, const StateSnapshot& prev,
                                 const StateSnapshot& cur) {
    FlowCheck out;
    for (int el = 0; el < disc.n_elements(); ++el) {
        const SymTensor dpl = cur.p[el] - prev.p[el];
        const double c1 = c1_eval(law, disc.element_average(cur.alpha, el));
        const SymTensor eff = cur.sigma[el] - cur.p[el] * (2.0 * c1);
        const double h = dp.k / dp.tau * dpl.trace();
        out.flow_residual = std::max(out.flow_residual, std::abs(h - eff.dot(dpl)));
        out.yield_residual = std::max(out.yield_residual, std::max(0.0, yield_value(dp, eff)));
        out.cone_residual = std::max(out.cone_residual, cone_violation(dp, dpl));
    }
    return out;
}

// ---------------------------------------------------------------------------
// safe load

struct SafeLoadCheck {
    bool present = false;
    bool inclusion_pass = true;   // yield(rho + ball of radius tau0) <= 0
    bool equilibrium_pass = true; // <rho, E v> = <L, v> on free dofs
    double inclusion_margin = -std::numeric_limits<double>::infinity(); // max over t, <= 0 passes
    double equilibrium_residual = 0.0;
    double C_rho = 0.0; // max over t of |rho(t)|
    bool pass = true;
};

// The ball-inclusion test is exact for spatially constant rho: the maximum
// of yield(rho + tauhat) over |tauhat| <= tau0 is attained in closed form,
//   max = tau rho_m + |rho_D| + tau0 sqrt(tau^2/n + 1) - k.
inline SafeLoadCheck check_safe_load(const Scenario& sc, const Discretization& disc,
                                     double tol_eq_rel) {
    SafeLoadCheck out;
    if (!sc.has_safe_load) return out;
    out.present = true;
    const SymTensor rho0 = SymTensor::from_voigt(sc.tensor_dim, sc.rho_voigt.data());
    const int n = sc.tensor_dim;
    const double ball_gain = std::sqrt(sc.dp.tau * sc.dp.tau / n + 1.0);

    // reuse the run's loading to check discrete equilibrium on free dofs
    auto setup = make_problem(sc);
    for (int i = 0; i <= sc.time_steps; ++i) {
        const double t = sc.horizon * i / sc.time_steps;
        const SymTensor rho = rho0 * sc.rho_scale(t);
        out.C_rho = std::max(out.C_rho, rho.norm());
        const double margin = sc.dp.tau * rho.mean() + rho.deviator().norm() +
                              sc.tau0 * ball_gain - sc.dp.k;
        out.inclusion_margin = std::max(out.inclusion_margin, margin);

        const VecX F = setup.problem.loading.load(t);
        const VecX Frho = disc.stress_pairing_load(rho);
        double resid = 0.0;
        for (int d : disc.free_dofs()) resid = std::max(resid, std::abs(Frho[d] - F[d]));
        out.equilibrium_residual = std::max(out.equilibrium_residual, resid);
        if (resid > tol_eq_rel * (1.0 + F.lpNorm<Eigen::Infinity>()))
            out.equilibrium_pass = false;
    }
    out.inclusion_pass = out.inclusion_margin <= 0.0;
    out.pass = out.inclusion_pass && out.equilibrium_pass;
    return out;
}

// ---------------------------------------------------------------------------
// whole-trajectory report

struct VerifyOptions {
    int n_samples = 1000;
    std::uint64_t seed = 4321;
    double tol_stab_rel = 1e-8; // of the problem energy scale Q(e0) + k |Omega|
    double tol_eq_rel = 1e-10;
    double tol_energy_rel = 100.0; // of solver tolerances (see energy_tol below)
};

struct VerifyStepRecord {
    double t = 0.0;
    double stability_margin = 0.0;
    bool stability_pass = true;
    double energy_residual = 0.0;
    double energy_bound = 0.0;
    bool energy_pass = true;
    double flow_residual = 0.0;
    double yield_residual = 0.0;
    double cone_residual = 0.0;
    bool alpha_monotone = true;
};

struct VerificationReport {
    bool pass = false;
    bool alpha_monotone_all = true;
    bool stability_all = true;
    bool energy_all = true;
    bool flow_all = true;
    bool ledger_all = true;
    double stability_tol = 0.0;
    double flow_tol = 0.0;
    double ledger_tol = 0.0;
    double min_stability_margin = 0.0;
    double max_energy_residual = 0.0;
    double max_ledger_gap = 0.0;
    std::vector<VerifyStepRecord> steps;
    SafeLoadCheck safe_load;
    std::string caveat = kStabilityCaveat;

    nlohmann::json to_json() const;
    std::string to_text() const;
};

// The flow/yield/cone residual tolerance: these are KKT certificates of
// element subproblems solved to near machine precision, scaled by the
// stress magnitude of the run.
inline double flow_tolerance(const std::vector<StateSnapshot>& snaps) {
    double smax = 1.0;
    for (const auto& s : snaps)
        for (const auto& sg : s.sigma) smax = std::max(smax, sg.norm());
    return 1e-8 * smax;
}

inline VerificationReport verify_trajectory(const ProblemSetup& ps,
                                            const std::vector<StateSnapshot>& snaps,
                                            const std::vector<LedgerRow>& ledger,
                                            const VerifyOptions& opt) {
    if (snaps.empty()) throw ValidationError("verify: no snapshots");
    if (snaps.size() != ledger.size())
        throw ValidationError("verify: snapshot and ledger sizes disagree");
    const Discretization& disc = *ps.disc;
    const Scenario& sc = ps.scenario;

    VerificationReport rep;

    // scale-aware stability tolerance from the initial snapshot
    const EnergyParts en0 =
        total_energy(disc, sc.hooke, sc.law, snaps[0].e, snaps[0].p, snaps[0].alpha);
    const double energy_scale = en0.Q + sc.dp.k * disc.mesh().volume();
    rep.stability_tol = opt.tol_stab_rel * energy_scale;
    rep.flow_tol = flow_tolerance(snaps);

    // solver-tolerance part of the energy bound, scaled by the run's
    // energy magnitude
    double run_scale = 1.0;
    for (const auto& r : ledger)
        run_scale = std::max(run_scale, std::abs(r.Q) + std::abs(r.Qtilde) + r.VH_cum +
                                            std::abs(r.load_term) + std::abs(r.work_load_cum));
    const double energy_tol =
        opt.tol_energy_rel * (sc.solver.tol_altmin + sc.solver.tol_uep) * run_scale;
    const EnergyCheck ec = check_energy_balance(ledger, hooke_gamma2(sc.hooke, sc.tensor_dim),
                                                energy_tol);
    rep.max_energy_residual = ec.max_residual;

    // the energy check above audits the csv rows against each other; this
    // one ties them to the state file, so the two artifacts cannot come
    // from different runs.  Recomputed with the same expressions as the
    // run itself, the gaps sit at accumulation rounding.
    rep.ledger_tol = 1e-12 * (1.0 + run_scale);
    for (size_t i = 0; i < snaps.size(); ++i) {
        const EnergyParts en =
            total_energy(disc, sc.hooke, sc.law, snaps[i].e, snaps[i].p, snaps[i].alpha);
        double gap = std::max({std::abs(en.Q - ledger[i].Q), std::abs(en.D - ledger[i].D),
                               std::abs(en.grad - ledger[i].grad),
                               std::abs(en.Qtilde - ledger[i].Qtilde),
                               std::abs(snaps[i].t - ledger[i].t)});
        if (i > 0) {
            double vh = 0.0;
            for (int el = 0; el < disc.n_elements(); ++el)
                vh += disc.mesh().measures[el] * sc.dp.k / sc.dp.tau *
                      (snaps[i].p[el] - snaps[i - 1].p[el]).trace();
            gap = std::max(gap, std::abs(vh - (ledger[i].VH_cum - ledger[i - 1].VH_cum)));
        }
        rep.max_ledger_gap = std::max(rep.max_ledger_gap, gap);
    }
    rep.ledger_all = rep.max_ledger_gap <= rep.ledger_tol;

    rep.min_stability_margin = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < snaps.size(); ++i) {
        VerifyStepRecord row;
        row.t = snaps[i].t;

        StabilityOptions sopt;
        sopt.n_samples = opt.n_samples;
        sopt.seed = opt.seed ^ (0x9e3779b97f4a7c15ull * (std::uint64_t)(i + 1));
        sopt.tol = rep.stability_tol;
        const VecX F = ps.problem.loading.load(snaps[i].t);
        const StabilityRecord sr =
            check_stability(disc, sc.hooke, sc.dp, sc.law, snaps[i], F, sopt);
        row.stability_margin = sr.margin;
        row.stability_pass = sr.pass;
        rep.min_stability_margin = std::min(rep.min_stability_margin, sr.margin);

        row.energy_residual = ec.rows[i].residual;
        row.energy_bound = ec.rows[i].bound;
        row.energy_pass = ec.rows[i].pass;

        if (i > 0) {
            const FlowCheck fc = check_flow_rule(disc, sc.dp, sc.law, snaps[i - 1], snaps[i]);
            row.flow_residual = fc.flow_residual;
            row.yield_residual = fc.yield_residual;
            row.cone_residual = fc.cone_residual;
            if (fc.flow_residual > rep.flow_tol || fc.yield_residual > rep.flow_tol ||
                fc.cone_residual > 0.0)
                rep.flow_all = false;
            for (size_t nd = 0; nd < snaps[i].alpha.size(); ++nd)
                if (snaps[i].alpha[nd] > snaps[i - 1].alpha[nd]) row.alpha_monotone = false;
        }
        rep.alpha_monotone_all = rep.alpha_monotone_all && row.alpha_monotone;
        rep.stability_all = rep.stability_all && row.stability_pass;
        rep.energy_all = rep.energy_all && row.energy_pass;
        rep.steps.push_back(row);
    }

    rep.safe_load = check_safe_load(sc, disc, opt.tol_eq_rel);
    rep.pass = rep.alpha_monotone_all && rep.stability_all && rep.energy_all && rep.flow_all &&
               rep.ledger_all && (!rep.safe_load.present || rep.safe_load.pass);
    return rep;
}

inline nlohmann::json VerificationReport::to_json() const {
    nlohmann::json j;
    j["schema"] = kVerifySchema;
    j["pass"] = pass;
    j["caveat"] = caveat;
    j["alpha_monotone"] = alpha_monotone_all;
    j["stability"] = {{"pass", stability_all},
                      {"min_margin", min_stability_margin},
                      {"tol", stability_tol}};
    j["energy"] = {{"pass", energy_all}, {"max_residual", max_energy_residual}};
    j["flow"] = {{"pass", flow_all}, {"tol", flow_tol}};
    j["ledger"] = {{"pass", ledger_all}, {"max_gap", max_ledger_gap}, {"tol", ledger_tol}};
    if (safe_load.present)
        j["safe_load"] = {{"pass", safe_load.pass},
                          {"inclusion_margin", safe_load.inclusion_margin},
                          {"equilibrium_residual", safe_load.equilibrium_residual},
                          {"C_rho", safe_load.C_rho}};
    j["steps"] = nlohmann::json::array();
    for (const auto& s : steps) {
        j["steps"].push_back({{"t", s.t},
                              {"stability_margin", s.stability_margin},
                              {"energy_residual", s.energy_residual},
                              {"energy_bound", s.energy_bound},
                              {"flow_residual", s.flow_residual},
                              {"yield_residual", s.yield_residual},
                              {"cone_residual", s.cone_residual},
                              {"alpha_monotone", s.alpha_monotone}});
    }
    return j;
}

inline std::string VerificationReport::to_text() const {
    std::ostringstream os;
    const auto line = [&](const char* name, bool ok, const std::string& detail) {
        os << (ok ? "PASS" : "FAIL") << "  " << name << "  " << detail << "\n";
    };
    os << "verification report (" << steps.size() << " snapshots)\n";
    line("irreversibility", alpha_monotone_all, "damage nonincreasing nodewise, exact");
    line("stability", stability_all,
         "min sampled margin " + format_double(min_stability_margin) + " (tol -" +
             format_double(stability_tol) + "); " + caveat);
    line("energy balance", energy_all,
         "max |residual| " + format_double(max_energy_residual));
    line("flow rule", flow_all, "residual tol " + format_double(flow_tol));
    line("ledger", ledger_all,
         "csv accounting matches the state file, max gap " + format_double(max_ledger_gap) +
             " (tol " + format_double(ledger_tol) + ")");
    if (safe_load.present)
        line("safe load", safe_load.pass,
             "inclusion margin " + format_double(safe_load.inclusion_margin) +
                 ", equilibrium residual " + format_double(safe_load.equilibrium_residual) +
                 ", C_rho " + format_double(safe_load.C_rho));
    os << (pass ? "PASS" : "FAIL") << "  overall\n";
    return os.str();
}

} // namespace geoplast
