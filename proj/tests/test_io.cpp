#include <catch2/catch_amalgamated.hpp>

#include "fixtures.hpp"

#include <filesystem>
#include <fstream>

using namespace geoplast;
namespace fs = std::filesystem;

namespace {

// fresh scratch directory per test so reruns never see stale files
fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "geoplast-test-io" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void spit(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    REQUIRE(out);
    out << content;
}

std::string error_message(const std::function<void()>& f) {
    try {
        f();
    } catch (const std::exception& e) {
        return e.what();
    }
    FAIL("expected an exception");
    return {};
}

Json valid_doc() {
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
        "solver": {"seed": 42, "multi_start": 2}
    })");
}

} // namespace

TEST_CASE("a valid scenario document parses into the expected fields") {
    const Scenario sc = parse_scenario_json(valid_doc());
    CHECK(sc.name == "triaxial-0d");
    CHECK(sc.mesh.kind == MeshKind::point);
    CHECK(sc.tensor_dim == 3);
    REQUIRE(sc.driven.size() == 6);
    CHECK(sc.driven[0] == 1);
    CHECK(sc.driven[1] == 0);

    CHECK(sc.hooke.lambda == 1.0);
    CHECK(sc.hooke.mu == 1.0);
    CHECK(sc.dp.tau == 0.6);
    CHECK(sc.dp.k == 0.04);
    CHECK(sc.dp.dim == 3);
    CHECK(sc.law.c_bar == 0.2);
    CHECK(sc.law.w_d == 0.0005);
    CHECK(sc.law.w_grad == 0.0);
    CHECK(sc.law.alpha_cap == DamageLaw{}.alpha_cap); // defaulted

    CHECK(sc.time_steps == 100);
    CHECK(sc.horizon == 1.0);
    CHECK(sc.w_values[0] == -0.08);
    CHECK(sc.w_scale(0.25) == 0.25); // linear ramp
    CHECK(sc.w_scale(-1.0) == 0.0);  // tables clamp to their endpoints
    CHECK(sc.w_scale(9.0) == 1.0);
    CHECK(sc.g_mode == TractionMode::stress);
    CHECK(sc.g_stress[1] == -0.01);

    CHECK(sc.alpha0 == 1.0);
    CHECK(sc.p0_voigt == std::vector<double>(6, 0.0));
    CHECK_FALSE(sc.has_safe_load);

    CHECK(sc.solver.seed == 42);
    CHECK(sc.solver.multi_start == 2);
    CHECK(sc.solver.tol_altmin == SolverParams{}.tol_altmin); // defaulted
}

TEST_CASE("every validation error is collected and named by its path") {
    Json doc = valid_doc();
    doc["material"]["k"] = -1.0;
    doc["loading"]["horizon"] = 0.0;
    doc["initial"]["alpha0"] = 1.5;

    const std::string msg = error_message([&] { parse_scenario_json(doc); });
    CHECK(msg.find("3 validation error(s)") != std::string::npos);
    CHECK(msg.find("material.k") != std::string::npos);
    CHECK(msg.find("loading.horizon") != std::string::npos);
    CHECK(msg.find("initial.alpha0") != std::string::npos);
}

TEST_CASE("unknown keys are rejected with their full path") {
    Json doc = valid_doc();
    doc["material"]["bogus"] = 1.0;
    doc["extra_section"] = Json::object();
    const std::string msg = error_message([&] { parse_scenario_json(doc); });
    CHECK(msg.find("material.bogus: unknown key") != std::string::npos);
    CHECK(msg.find("extra_section: unknown key") != std::string::npos);
}

TEST_CASE("scale tables must be strictly increasing in time") {
    Json doc = valid_doc();
    doc["loading"]["w"]["scale"] = {{"t", {0.0, 1.0, 1.0}}, {"v", {0.0, 0.5, 1.0}}};
    const std::string msg = error_message([&] { parse_scenario_json(doc); });
    CHECK(msg.find("loading.w.scale.t: must be strictly increasing") != std::string::npos);
}

TEST_CASE("scenario files that do not exist or are not JSON raise typed errors") {
    CHECK_THROWS_AS(parse_scenario("/nonexistent/scenario.json"), IoError);
    const fs::path dir = scratch("bad-json");
    spit(dir / "broken.json", "{ not json");
    CHECK_THROWS_AS(parse_scenario((dir / "broken.json").string()), ValidationError);
}

TEST_CASE("shortest round-trip decimals restore doubles bitwise") {
    const double values[] = {0.1,    1.0 / 3.0, 1e-300, 6.02214076e23,
                             -0.125, 3.141592653589793, 0.0};
    for (double x : values) {
        const double y = parse_double(format_double(x), "test");
        CHECK(std::memcmp(&x, &y, sizeof x) == 0);
    }
    CHECK_THROWS_AS(parse_double("1.2x", "test"), IoError);
    CHECK_THROWS_AS(parse_double("", "test"), IoError);
}

TEST_CASE("the ledger survives a CSV round trip bitwise") {
    auto b = fixtures::triaxial_point(40);
    const Trajectory traj = run_evolution(b.problem);
    const fs::path dir = scratch("ledger");

    write_ledger_csv((dir / "ledger.csv").string(), traj.ledger);
    const auto rows = read_ledger_csv((dir / "ledger.csv").string());
    REQUIRE(rows.size() == traj.ledger.size());
    for (size_t i = 0; i < rows.size(); ++i) {
        const LedgerRow& a = traj.ledger[i];
        const LedgerRow& r = rows[i];
        CHECK(r.t == a.t);
        CHECK(r.Q == a.Q);
        CHECK(r.D == a.D);
        CHECK(r.grad == a.grad);
        CHECK(r.Qtilde == a.Qtilde);
        CHECK(r.VH_cum == a.VH_cum);
        CHECK(r.work_sigma_cum == a.work_sigma_cum);
        CHECK(r.work_load_cum == a.work_load_cum);
        CHECK(r.load_term == a.load_term);
        CHECK(r.energy_residual == a.energy_residual);
        CHECK(r.strain_incr_norm == a.strain_incr_norm);
        CHECK(r.flow_residual == a.flow_residual);
        CHECK(r.flow_residual_stress == a.flow_residual_stress);
        CHECK(r.yield_residual == a.yield_residual);
        CHECK(r.cone_residual == a.cone_residual);
        CHECK(r.sweeps == a.sweeps);
        CHECK(r.uep_iterations == a.uep_iterations);
        CHECK(r.alpha_iterations == a.alpha_iterations);
        CHECK(r.incremental_objective == a.incremental_objective);
    }

    // writing the parsed rows again reproduces the file byte for byte
    write_ledger_csv((dir / "again.csv").string(), rows);
    CHECK(slurp(dir / "again.csv") == slurp(dir / "ledger.csv"));
}

TEST_CASE("malformed ledger files are rejected with location context") {
    const fs::path dir = scratch("ledger-bad");
    CHECK_THROWS_AS(read_ledger_csv((dir / "missing.csv").string()), IoError);

    spit(dir / "schema.csv", "# schema: something-else\nstep,t\n");
    CHECK_THROWS_AS(read_ledger_csv((dir / "schema.csv").string()), IoError);

    auto b = fixtures::hydrostatic_point(3);
    const Trajectory traj = run_evolution(b.problem);
    write_ledger_csv((dir / "good.csv").string(), traj.ledger);
    std::string text = slurp(dir / "good.csv");

    SECTION("truncated row") {
        const size_t last_comma = text.rfind(',');
        spit(dir / "short.csv", text.substr(0, last_comma) + "\n");
        const std::string msg =
            error_message([&] { read_ledger_csv((dir / "short.csv").string()); });
        CHECK(msg.find("short.csv:") != std::string::npos);
        CHECK(msg.find("fields") != std::string::npos);
    }

    SECTION("non-contiguous step index") {
        const size_t row2 = text.find("\n2,");
        REQUIRE(row2 != std::string::npos);
        text.replace(row2, 3, "\n7,");
        spit(dir / "steps.csv", text);
        const std::string msg =
            error_message([&] { read_ledger_csv((dir / "steps.csv").string()); });
        CHECK(msg.find("non-contiguous step index") != std::string::npos);
    }

    SECTION("corrupted number") {
        const size_t pos = text.rfind("\n1,");
        REQUIRE(pos != std::string::npos);
        text.replace(pos, 3, "\n1,");
        text.insert(pos + 3, "zzz");
        spit(dir / "number.csv", text);
        CHECK_THROWS_AS(read_ledger_csv((dir / "number.csv").string()), IoError);
    }
}

TEST_CASE("snapshots survive a state-file round trip exactly") {
    auto b = fixtures::hydrostatic_point(10);
    const Trajectory traj = run_evolution(b.problem);
    const fs::path dir = scratch("state");
    const Json doc = valid_doc();

    write_state_json((dir / "state.json").string(), doc, traj.snapshots);
    const StateFile f = read_state_json((dir / "state.json").string(), 3);
    CHECK(f.scenario == doc);
    REQUIRE(f.snapshots.size() == traj.snapshots.size());
    for (size_t i = 0; i < f.snapshots.size(); ++i) {
        const StateSnapshot& a = traj.snapshots[i];
        const StateSnapshot& r = f.snapshots[i];
        CHECK(r.t == a.t);
        REQUIRE(r.u.size() == a.u.size());
        for (int d = 0; d < a.u.size(); ++d) CHECK(r.u[d] == a.u[d]);
        CHECK(r.alpha == a.alpha);
        REQUIRE(r.e.size() == a.e.size());
        for (size_t el = 0; el < a.e.size(); ++el) {
            for (int c = 0; c < a.e[el].voigt_size(); ++c) {
                CHECK(r.e[el][c] == a.e[el][c]);
                CHECK(r.p[el][c] == a.p[el][c]);
                CHECK(r.sigma[el][c] == a.sigma[el][c]);
            }
        }
    }

    // the tensor dimension is recovered from the embedded scenario when no
    // hint is given
    const StateFile g = read_state_json((dir / "state.json").string());
    REQUIRE(g.snapshots.size() == traj.snapshots.size());
    CHECK(g.snapshots.back().p[0].voigt_size() == 6);

    write_state_json((dir / "state2.json").string(), doc, traj.snapshots);
    CHECK(slurp(dir / "state2.json") == slurp(dir / "state.json"));
}

TEST_CASE("state files with the wrong shape are rejected") {
    const fs::path dir = scratch("state-bad");
    CHECK_THROWS_AS(read_state_json((dir / "missing.json").string()), IoError);

    spit(dir / "schema.json", R"({"schema": "other", "scenario": {}, "snapshots": []})");
    CHECK_THROWS_AS(read_state_json((dir / "schema.json").string()), IoError);

    spit(dir / "sections.json", R"({"schema": "geoplast-state-1", "scenario": {}})");
    CHECK_THROWS_AS(read_state_json((dir / "sections.json").string()), IoError);

    auto b = fixtures::hydrostatic_point(2);
    const Trajectory traj = run_evolution(b.problem);
    write_state_json((dir / "good.json").string(), Json::object(), traj.snapshots);
    Json j;
    {
        std::ifstream in(dir / "good.json");
        in >> j;
    }

    SECTION("snapshot missing a field") {
        j["snapshots"][0].erase("u");
        spit(dir / "nofield.json", j.dump());
        const std::string msg =
            error_message([&] { read_state_json((dir / "nofield.json").string(), 3); });
        CHECK(msg.find("snapshot 0") != std::string::npos);
    }

    SECTION("voigt array of the wrong length") {
        j["snapshots"][1]["p"][0] = {1.0, 2.0};
        spit(dir / "voigt.json", j.dump());
        const std::string msg =
            error_message([&] { read_state_json((dir / "voigt.json").string(), 3); });
        CHECK(msg.find("6-entry voigt array") != std::string::npos);
    }
}

TEST_CASE("plot emission writes the four charts") {
    const fs::path dir = scratch("plots");

    SECTION("history charts for a material point") {
        auto b = fixtures::triaxial_point(20);
        const Trajectory traj = run_evolution(b.problem);
        const auto written = emit_plots(*b.disc, traj.snapshots, traj.ledger, dir.string());
        REQUIRE(written.size() == 4);
        for (const auto& path : written) {
            const std::string svg = slurp(path);
            CHECK(svg.rfind("<svg", 0) == 0);
            CHECK(svg.find("</svg>") != std::string::npos);
        }
        CHECK(slurp(dir / "alpha.svg").find("damage history") != std::string::npos);
        CHECK(slurp(dir / "energy.svg").find("plastic work VH") != std::string::npos);
    }

    SECTION("damage profile along a bar") {
        auto b = fixtures::elastic_bar(4, 3);
        const Trajectory traj = run_evolution(b.problem);
        emit_plots(*b.disc, traj.snapshots, traj.ledger, dir.string());
        const std::string svg = slurp(dir / "alpha.svg");
        CHECK(svg.find("damage field") != std::string::npos);
        CHECK(svg.find("initial") != std::string::npos);
        CHECK(svg.find("final") != std::string::npos);
    }

    SECTION("damage field raster on a planar mesh") {
        Json doc = Json::parse(R"({
            "name": "tiny-rect",
            "mesh": {"kind": "rect", "nx": 2, "ny": 2, "lx": 1.0, "ly": 1.0,
                     "boundary_tags": {"left": "neumann", "right": "neumann",
                                       "bottom": "dirichlet", "top": "dirichlet"}},
            "material": {"lambda": 1.0, "mu": 1.0, "tau": 0.6, "k": 100.0,
                         "c_bar": 1.0, "w_d": 1000.0, "w_grad": 0.0},
            "loading": {"time_steps": 2, "horizon": 1.0,
                        "w": {"offset": [0, 0], "grad": [[0, 0], [0, -0.01]],
                              "scale": {"t": [0, 1], "v": [0, 1]}}},
            "initial": {"alpha0": 0.5}
        })");
        ProblemSetup ps = make_problem(parse_scenario_json(doc));
        const Trajectory traj = run_evolution(ps.problem);
        emit_plots(*ps.disc, traj.snapshots, traj.ledger, dir.string());
        const std::string svg = slurp(dir / "alpha.svg");
        CHECK(svg.find("damage field at t = 1") != std::string::npos);
        CHECK(svg.find("<polygon") != std::string::npos);
    }

    SECTION("refuses trajectories too short to chart") {
        auto b = fixtures::hydrostatic_point(2);
        const Trajectory traj = run_evolution(b.problem);
        std::vector<StateSnapshot> one(traj.snapshots.begin(), traj.snapshots.begin() + 1);
        std::vector<LedgerRow> one_row(traj.ledger.begin(), traj.ledger.begin() + 1);
        CHECK_THROWS_AS(emit_plots(*b.disc, one, one_row, dir.string()), ValidationError);
        CHECK_THROWS_AS(emit_plots(*b.disc, traj.snapshots, one_row, dir.string()),
                        ValidationError);
    }
}
