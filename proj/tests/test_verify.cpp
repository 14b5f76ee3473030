#include <catch2/catch_amalgamated.hpp>

#include "fixtures.hpp"

using namespace geoplast;

namespace {

// the scale-aware stability tolerance used by verify_trajectory, recomputed
// here so the direct check_stability tests pin the same contract
double stability_tolerance(const Discretization& disc, const HookeParams& hooke,
                           const DruckerPrager& dp, const DamageLaw& law,
                           const StateSnapshot& s0) {
    const EnergyParts en0 = total_energy(disc, hooke, law, s0.e, s0.p, s0.alpha);
    return 1e-8 * (en0.Q + dp.k * disc.mesh().volume());
}

// doubles the plastic strain of one snapshot while keeping the kinematic
// split e + p = E u and sigma = C e consistent, so the corruption is only
// detectable through the energies, not through an admissibility violation
void inflate_plastic_strain(const Discretization& disc, const HookeParams& hooke,
                            StateSnapshot& s) {
    for (int el = 0; el < disc.n_elements(); ++el) {
        s.p[el] = s.p[el] * 2.0;
        s.e[el] = disc.strain(s.u, el) - s.p[el];
        s.sigma[el] = hooke_apply(hooke, s.e[el]);
    }
}

Json triaxial_doc() {
    return Json::parse(R"({
        "name": "triaxial-0d",
        "mesh": {"kind": "point", "tensor_dim": 3, "driven": [1, 0, 0, 0, 0, 0]},
        "material": {
            "lambda": 1.0, "mu": 1.0,
            "tau": 0.6, "k": 0.04,
            "c_bar": 0.2, "w_d": 0.0005, "w_grad": 0.0
        },
        "loading": {
            "time_steps": 100, "horizon": 1.0,
            "w": {"values": [-0.08, 0, 0, 0, 0, 0], "scale": {"t": [0, 1], "v": [0, 1]}},
            "g": {"stress": [0, -0.01, -0.01, 0, 0, 0], "scale": 1.0}
        },
        "initial": {"alpha0": 1.0},
        "solver": {"seed": 1234}
    })");
}

Json hydrostatic_doc(int steps) {
    Json doc = Json::parse(R"({
        "name": "hydrostatic-0d",
        "mesh": {"kind": "point", "tensor_dim": 3, "driven": [1, 1, 1, 1, 1, 1]},
        "material": {
            "lambda": 1.0, "mu": 1.0,
            "tau": 0.6, "k": 0.3,
            "c_bar": 1.0, "w_d": 1.0, "w_grad": 0.0
        },
        "loading": {
            "time_steps": 100, "horizon": 1.0,
            "w": {"values": [0.15, 0.15, 0.15, 0, 0, 0], "scale": {"t": [0, 1], "v": [0, 1]}}
        },
        "initial": {"alpha0": 0.0},
        "solver": {"seed": 1234}
    })");
    doc["loading"]["time_steps"] = steps;
    return doc;
}

} // namespace

TEST_CASE("the state itself is a competitor with margin exactly zero") {
    auto b = fixtures::hydrostatic_point(20);
    const Trajectory traj = run_evolution(b.problem);

    for (const auto& snap : traj.snapshots) {
        StabilityOptions opt;
        opt.n_samples = 1; // only the trivial competitor
        const StabilityRecord rec = check_stability(*b.disc, b.problem.hooke, b.problem.dp,
                                                    b.problem.law, snap,
                                                    b.problem.loading.load(snap.t), opt);
        CHECK(rec.trivial_margin == 0.0);
        CHECK(rec.margin == 0.0);
        CHECK(rec.worst_sample == 0);
        CHECK(rec.pass); // tol <= 0 means report-only
    }
}

TEST_CASE("converged snapshots sample stable at the scaled tolerance") {
    auto b = fixtures::triaxial_point(100);
    const Trajectory traj = run_evolution(b.problem);
    const double tol = stability_tolerance(*b.disc, b.problem.hooke, b.problem.dp,
                                           b.problem.law, traj.snapshots.front());

    for (size_t i = 0; i < traj.snapshots.size(); ++i) {
        const auto& snap = traj.snapshots[i];
        StabilityOptions opt;
        opt.n_samples = 400;
        opt.seed = 4321 ^ (0x9e3779b97f4a7c15ull * (std::uint64_t)(i + 1));
        opt.tol = tol;
        const StabilityRecord rec = check_stability(*b.disc, b.problem.hooke, b.problem.dp,
                                                    b.problem.law, snap,
                                                    b.problem.loading.load(snap.t), opt);
        CHECK(rec.margin >= -tol);
        CHECK(rec.pass);
    }
}

TEST_CASE("an inflated plastic state is flagged unstable across seeds") {
    auto b = fixtures::triaxial_point(100);
    const Trajectory traj = run_evolution(b.problem);

    StateSnapshot bad = traj.snapshots.back();
    REQUIRE(bad.p[0].trace() > 0.01); // the run did develop plastic strain
    inflate_plastic_strain(*b.disc, b.problem.hooke, bad);

    const double tol = stability_tolerance(*b.disc, b.problem.hooke, b.problem.dp,
                                           b.problem.law, traj.snapshots.front());
    const VecX F = b.problem.loading.load(bad.t);
    for (std::uint64_t seed : {11ull, 22ull, 33ull, 44ull, 55ull}) {
        StabilityOptions opt;
        opt.n_samples = 500;
        opt.seed = seed;
        opt.tol = tol;
        const StabilityRecord rec =
            check_stability(*b.disc, b.problem.hooke, b.problem.dp, b.problem.law, bad, F, opt);
        CHECK(rec.margin < -tol);
        CHECK_FALSE(rec.pass);
        CHECK(rec.worst_sample > 0);
    }
}

TEST_CASE("a constant shift of the dissipation density cancels in margins") {
    auto b = fixtures::triaxial_point(100);
    const Trajectory traj = run_evolution(b.problem);
    const StateSnapshot& snap = traj.snapshots.back();
    const VecX F = b.problem.loading.load(snap.t);

    StabilityOptions opt;
    opt.n_samples = 300;
    opt.seed = 99;
    const StabilityRecord base =
        check_stability(*b.disc, b.problem.hooke, b.problem.dp, b.problem.law, snap, F, opt);
    opt.d_offset = 13.7;
    const StabilityRecord shifted =
        check_stability(*b.disc, b.problem.hooke, b.problem.dp, b.problem.law, snap, F, opt);

    CHECK(base.trivial_margin == 0.0);
    CHECK(shifted.trivial_margin == 0.0);
    // the shift adds d_offset * |Omega| to both sides of every comparison;
    // only double rounding at the offset's magnitude survives
    CHECK(std::abs(base.margin - shifted.margin) <= 1e-12);
}

TEST_CASE("energy balance accepts an exact elastic ledger") {
    auto b = fixtures::elastic_bar(8, 12);
    const Trajectory traj = run_evolution(b.problem);
    const EnergyCheck ec =
        check_energy_balance(traj.ledger, hooke_gamma2(b.problem.hooke, 2), 1e-12);
    CHECK(ec.pass);
    CHECK(ec.max_residual <= 1e-12);
    REQUIRE(ec.rows.size() == traj.ledger.size());
    for (const auto& row : ec.rows) CHECK(row.pass);
}

TEST_CASE("energy balance flags a tampered dissipation column at its step") {
    auto b = fixtures::hydrostatic_point(100);
    Trajectory traj = run_evolution(b.problem);
    const double gamma2 = hooke_gamma2(b.problem.hooke, 3);

    const EnergyCheck clean = check_energy_balance(traj.ledger, gamma2, 1e-4);
    REQUIRE(clean.pass);

    REQUIRE(traj.ledger[90].VH_cum > 0.01);
    traj.ledger[90].VH_cum = 0.0;
    const EnergyCheck ec = check_energy_balance(traj.ledger, gamma2, 1e-4);
    CHECK_FALSE(ec.pass);
    CHECK_FALSE(ec.rows[90].pass);
    for (size_t i = 0; i < 90; ++i) CHECK(ec.rows[i].pass);

    CHECK_THROWS_AS(check_energy_balance({}, gamma2, 1e-4), ValidationError);
}

TEST_CASE("flow certificates are exactly zero on elastic steps") {
    auto b = fixtures::elastic_bar(4, 6);
    const Trajectory traj = run_evolution(b.problem);
    for (size_t i = 1; i < traj.snapshots.size(); ++i) {
        const FlowCheck fc = check_flow_rule(*b.disc, b.problem.dp, b.problem.law,
                                             traj.snapshots[i - 1], traj.snapshots[i]);
        CHECK(fc.flow_residual == 0.0);
        CHECK(fc.yield_residual == 0.0);
        CHECK(fc.cone_residual == 0.0);
    }
}

TEST_CASE("flow certificates hold on plastic steps and catch stress tampering") {
    auto b = fixtures::triaxial_point(100);
    const Trajectory traj = run_evolution(b.problem);
    const double tol = flow_tolerance(traj.snapshots);

    for (size_t i = 1; i < traj.snapshots.size(); ++i) {
        const FlowCheck fc = check_flow_rule(*b.disc, b.problem.dp, b.problem.law,
                                             traj.snapshots[i - 1], traj.snapshots[i]);
        CHECK(fc.flow_residual <= tol);
        CHECK(fc.yield_residual <= tol);
        CHECK(fc.cone_residual == 0.0);
    }

    // a hydrostatic stress shift moves the effective stress out of the
    // yield surface on a flowing step
    StateSnapshot bad = traj.snapshots.back();
    bad.sigma[0] = bad.sigma[0] + SymTensor::identity(3) * (0.1 * b.problem.dp.k);
    const FlowCheck fc = check_flow_rule(*b.disc, b.problem.dp, b.problem.law,
                                         traj.snapshots[traj.snapshots.size() - 2], bad);
    CHECK(fc.yield_residual > tol);
}

TEST_CASE("safe-load ball inclusion pins the closed-form radius") {
    // rho = diag(0, -0.01, -0.01), tau = 0.6, k = 0.04, n = 3:
    //   tau rho_m = -0.004, |rho_D| = 0.0066667 sqrt(1.5) = 0.0081650,
    //   ball gain sqrt(tau^2/3 + 1) = 1.0583005,
    // so the largest admissible radius is
    //   (0.04 + 0.004 - 0.0081650) / 1.0583005 = 0.0338647
    auto with_radius = [&](double tau0) {
        Json doc = triaxial_doc();
        doc["safe_load"] = {{"rho", {0, -0.01, -0.01, 0, 0, 0}},
                            {"scale", 1.0},
                            {"tau0", tau0}};
        ProblemSetup ps = make_problem(parse_scenario_json(doc));
        return check_safe_load(ps.scenario, *ps.disc, 1e-10);
    };

    const SafeLoadCheck inside = with_radius(0.0335);
    CHECK(inside.present);
    CHECK(inside.inclusion_pass);
    CHECK(inside.inclusion_margin <= 0.0);
    CHECK(inside.equilibrium_pass);
    CHECK(inside.equilibrium_residual == 0.0); // rho matches the imposed stress exactly
    CHECK(std::abs(inside.C_rho - std::sqrt(2.0) * 0.01) <= 1e-12);
    CHECK(inside.pass);

    const SafeLoadCheck outside = with_radius(0.0343);
    CHECK(outside.inclusion_margin > 0.0);
    CHECK_FALSE(outside.inclusion_pass);
    CHECK_FALSE(outside.pass);
}

TEST_CASE("safe-load equilibrium rejects a field that does not carry the load") {
    Json doc = triaxial_doc();
    doc["safe_load"] = {{"rho", {0, -0.02, -0.01, 0, 0, 0}}, // load applies -0.01 laterally
                        {"scale", 1.0},
                        {"tau0", 0.001}};
    ProblemSetup ps = make_problem(parse_scenario_json(doc));
    const SafeLoadCheck chk = check_safe_load(ps.scenario, *ps.disc, 1e-10);
    CHECK(chk.inclusion_pass);
    CHECK_FALSE(chk.equilibrium_pass);
    CHECK(chk.equilibrium_residual > 1e-3);
    CHECK_FALSE(chk.pass);
}

TEST_CASE("safe-load check is inert when the scenario declares none") {
    ProblemSetup ps = make_problem(parse_scenario_json(triaxial_doc()));
    const SafeLoadCheck chk = check_safe_load(ps.scenario, *ps.disc, 1e-10);
    CHECK_FALSE(chk.present);
    CHECK(chk.pass);
}

TEST_CASE("trajectory verification passes a clean run and isolates seeded faults") {
    Json doc = triaxial_doc();
    doc["safe_load"] = {{"rho", {0, -0.01, -0.01, 0, 0, 0}}, {"scale", 1.0}, {"tau0", 0.03}};
    ProblemSetup ps = make_problem(parse_scenario_json(doc));
    const Trajectory traj = run_evolution(ps.problem);

    VerifyOptions vo;
    vo.n_samples = 400;

    const VerificationReport clean = verify_trajectory(ps, traj.snapshots, traj.ledger, vo);
    REQUIRE(clean.pass);
    CHECK(clean.alpha_monotone_all);
    CHECK(clean.stability_all);
    CHECK(clean.energy_all);
    CHECK(clean.flow_all);
    CHECK(clean.ledger_all);
    CHECK(clean.max_ledger_gap <= clean.ledger_tol);
    CHECK(clean.safe_load.present);
    CHECK(clean.safe_load.pass);
    CHECK(clean.min_stability_margin >= -clean.stability_tol);
    CHECK(clean.steps.size() == traj.snapshots.size());
    CHECK(clean.caveat.find("necessary") != std::string::npos);

    SECTION("inflated plastic strain trips the stability check") {
        auto snaps = traj.snapshots;
        inflate_plastic_strain(*ps.disc, ps.scenario.hooke, snaps[95]);
        const VerificationReport rep = verify_trajectory(ps, snaps, traj.ledger, vo);
        CHECK_FALSE(rep.stability_all);
        CHECK(rep.energy_all);        // the csv rows still balance each other
        CHECK_FALSE(rep.ledger_all);  // but no longer describe these snapshots
        CHECK_FALSE(rep.pass);
    }

    SECTION("a zeroed dissipation column trips the accounting checks") {
        auto ledger = traj.ledger;
        REQUIRE(ledger[90].VH_cum > 1e-4);
        ledger[90].VH_cum = 0.0;
        const VerificationReport rep = verify_trajectory(ps, traj.snapshots, ledger, vo);
        CHECK_FALSE(rep.energy_all);
        CHECK_FALSE(rep.ledger_all);
        CHECK(rep.stability_all);
        CHECK(rep.flow_all);
        CHECK_FALSE(rep.pass);
    }

    SECTION("a stress shift trips the flow check only") {
        auto snaps = traj.snapshots;
        snaps[95].sigma[0] =
            snaps[95].sigma[0] + SymTensor::identity(3) * (0.1 * ps.scenario.dp.k);
        const VerificationReport rep = verify_trajectory(ps, snaps, traj.ledger, vo);
        CHECK_FALSE(rep.flow_all);
        CHECK(rep.stability_all); // the sampled values are energy-based, not stress-based
        CHECK(rep.energy_all);
        CHECK(rep.ledger_all); // energies are recomputed from (e, p, alpha), not sigma
        CHECK_FALSE(rep.pass);
    }

    SECTION("a ledger from a different run is flagged even though it balances") {
        ProblemSetup other = make_problem(parse_scenario_json(hydrostatic_doc(100)));
        const Trajectory foreign = run_evolution(other.problem);
        REQUIRE(foreign.ledger.size() == traj.ledger.size());
        const VerificationReport rep = verify_trajectory(ps, traj.snapshots, foreign.ledger, vo);
        CHECK(rep.energy_all); // internally consistent accounting...
        CHECK_FALSE(rep.ledger_all); // ...for some other trajectory
        CHECK(rep.max_ledger_gap > 1e3 * rep.ledger_tol);
        CHECK_FALSE(rep.pass);
    }

    SECTION("a damage increase trips irreversibility") {
        auto snaps = traj.snapshots;
        snaps[95].alpha[0] = snaps[94].alpha[0] + 0.01;
        const VerificationReport rep = verify_trajectory(ps, snaps, traj.ledger, vo);
        CHECK_FALSE(rep.alpha_monotone_all);
        CHECK_FALSE(rep.pass);
    }
}

TEST_CASE("verification reports serialize to json and text") {
    ProblemSetup ps = make_problem(parse_scenario_json(hydrostatic_doc(20)));
    const Trajectory traj = run_evolution(ps.problem);
    VerifyOptions vo;
    vo.n_samples = 200;
    const VerificationReport rep = verify_trajectory(ps, traj.snapshots, traj.ledger, vo);
    REQUIRE(rep.pass);

    const Json j = rep.to_json();
    CHECK(j["schema"] == "geoplast-verify-1");
    CHECK(j["pass"] == true);
    CHECK(j["alpha_monotone"] == true);
    CHECK(j["stability"]["pass"] == true);
    CHECK(j["energy"]["pass"] == true);
    CHECK(j["flow"]["pass"] == true);
    CHECK(j["ledger"]["pass"] == true);
    CHECK(j["ledger"].contains("max_gap"));
    CHECK_FALSE(j.contains("safe_load")); // none declared
    REQUIRE(j["steps"].size() == traj.snapshots.size());
    for (const char* key : {"t", "stability_margin", "energy_residual", "energy_bound",
                            "flow_residual", "yield_residual", "cone_residual",
                            "alpha_monotone"})
        CHECK(j["steps"][0].contains(key));

    const std::string text = rep.to_text();
    CHECK(text.find("PASS  overall") != std::string::npos);
    CHECK(text.find("irreversibility") != std::string::npos);
    CHECK(text.find("necessary") != std::string::npos);
}

TEST_CASE("trajectory verification validates its inputs") {
    ProblemSetup ps = make_problem(parse_scenario_json(hydrostatic_doc(5)));
    const Trajectory traj = run_evolution(ps.problem);
    VerifyOptions vo;
    vo.n_samples = 10;

    CHECK_THROWS_AS(verify_trajectory(ps, {}, {}, vo), ValidationError);
    auto short_ledger = traj.ledger;
    short_ledger.pop_back();
    CHECK_THROWS_AS(verify_trajectory(ps, traj.snapshots, short_ledger, vo), ValidationError);
}
