#pragma once

// Scenario files: a JSON schema describing mesh, material, loading program,
// initial data, optional safe-load certificate and solver knobs, validated
// into a runnable Problem.  Validation collects *all* schema errors (each
// naming its JSON path) before failing, so a bad file is fixed in one pass.
//
// Loading model: every time-dependent input is a fixed spatial profile
// times a scalar piecewise-linear table in t ("scale").  Tables are either
// a plain number (constant) or {"t": [...], "v": [...]} with strictly
// increasing t; evaluation clamps outside the covered range.

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "evolution.hpp"

namespace geoplast {

using Json = nlohmann::json;

struct Table {
    std::vector<double> t{0.0};
    std::vector<double> v{1.0};

    static Table constant(double value) { return Table{{0.0}, {value}}; }

    double operator()(double time) const {
        if (time <= t.front()) return v.front();
        if (time >= t.back()) return v.back();
        const auto it = std::upper_bound(t.begin(), t.end(), time);
        const size_t i = size_t(it - t.begin());
        const double s = (time - t[i - 1]) / (t[i] - t[i - 1]);
        return v[i - 1] + s * (v[i] - v[i - 1]);
    }
};

enum class TractionMode { none, pressure, traction, stress };

struct Scenario {
    std::string name;

    MeshSpec mesh;
    int tensor_dim = 3;
    std::vector<char> driven; // point meshes: which strain components are imposed

    HookeParams hooke;
    DruckerPrager dp;
    DamageLaw law;

    int time_steps = 1;
    double horizon = 1.0;

    // Dirichlet program: point -> voigt values, segment/rect -> affine field
    std::vector<double> w_values;
    std::vector<double> w_offset;
    std::vector<std::vector<double>> w_grad;
    Table w_scale;

    bool has_f = false;
    std::vector<double> f_vector;
    Table f_scale;

    TractionMode g_mode = TractionMode::none;
    double g_pressure = 0.0;
    std::vector<double> g_traction;
    std::vector<double> g_stress; // point meshes: imposed constant stress
    Table g_scale;

    double alpha0 = 1.0;
    std::vector<double> p0_voigt;

    bool has_safe_load = false;
    std::vector<double> rho_voigt;
    Table rho_scale;
    double tau0 = 0.0;

    SolverParams solver;

    Json raw; // the document as authored, embedded in result files
};

namespace detail {

class SchemaReader {
public:
    explicit SchemaReader(const Json& doc) : doc_(doc) {}

    const Json* section(const std::string& key, bool required) {
        if (!doc_.contains(key)) {
            if (required) fail(key, "missing required section");
            return nullptr;
        }
        if (!doc_[key].is_object()) {
            fail(key, "must be an object");
            return nullptr;
        }
        return &doc_[key];
    }

    void check_keys(const Json& j, const std::string& path, std::set<std::string> allowed) {
        for (const auto& item : j.items())
            if (!allowed.count(item.key())) fail(path + "." + item.key(), "unknown key");
    }

    double num(const Json& j, const std::string& path, const std::string& key,
               std::optional<double> fallback = std::nullopt) {
        if (!j.contains(key)) {
            if (fallback) return *fallback;
            fail(path + "." + key, "missing required number");
            return 0.0;
        }
        if (!j[key].is_number()) {
            fail(path + "." + key, "must be a number");
            return fallback.value_or(0.0);
        }
        return j[key].get<double>();
    }

    int integer(const Json& j, const std::string& path, const std::string& key,
                std::optional<int> fallback = std::nullopt) {
        if (!j.contains(key)) {
            if (fallback) return *fallback;
            fail(path + "." + key, "missing required integer");
            return 0;
        }
        if (!j[key].is_number_integer()) {
            fail(path + "." + key, "must be an integer");
            return fallback.value_or(0);
        }
        return j[key].get<int>();
    }

    std::string str(const Json& j, const std::string& path, const std::string& key) {
        if (!j.contains(key) || !j[key].is_string()) {
            fail(path + "." + key, "missing required string");
            return {};
        }
        return j[key].get<std::string>();
    }

    std::vector<double> num_array(const Json& j, const std::string& path, const std::string& key,
                                  int size) {
        std::vector<double> out;
        if (!j.contains(key) || !j[key].is_array()) {
            fail(path + "." + key, "missing required array of " + std::to_string(size) + " numbers");
            return std::vector<double>(size, 0.0);
        }
        for (const auto& e : j[key]) {
            if (!e.is_number()) {
                fail(path + "." + key, "entries must be numbers");
                return std::vector<double>(size, 0.0);
            }
            out.push_back(e.get<double>());
        }
        if (int(out.size()) != size) {
            fail(path + "." + key, "expected " + std::to_string(size) + " entries, got " +
                                       std::to_string(out.size()));
            out.resize(size, 0.0);
        }
        return out;
    }

    Table table(const Json& j, const std::string& path, const std::string& key) {
        if (!j.contains(key)) return Table::constant(1.0);
        const Json& tj = j[key];
        if (tj.is_number()) return Table::constant(tj.get<double>());
        if (!tj.is_object() || !tj.contains("t") || !tj.contains("v")) {
            fail(path + "." + key, "must be a number or {\"t\": [...], \"v\": [...]}");
            return Table::constant(1.0);
        }
        check_keys(tj, path + "." + key, {"t", "v"});
        Table tab;
        tab.t.clear();
        tab.v.clear();
        for (const auto& e : tj["t"]) tab.t.push_back(e.get<double>());
        for (const auto& e : tj["v"]) tab.v.push_back(e.get<double>());
        if (tab.t.empty() || tab.t.size() != tab.v.size()) {
            fail(path + "." + key, "t and v must be nonempty and the same length");
            return Table::constant(1.0);
        }
        for (size_t i = 1; i < tab.t.size(); ++i)
            if (!(tab.t[i] > tab.t[i - 1])) {
                fail(path + "." + key + ".t", "must be strictly increasing");
                break;
            }
        return tab;
    }

    void fail(const std::string& path, const std::string& message) {
        errors.push_back(path + ": " + message);
    }

    std::vector<std::string> errors;

private:
    const Json& doc_;
};

} // namespace detail

// Parses and validates a scenario document.  Throws ValidationError whose
// message lists every violation found, each naming its JSON path.
inline Scenario parse_scenario_json(const Json& doc, const std::string& context = "scenario") {
    detail::SchemaReader rd(doc);
    Scenario sc;
    sc.raw = doc;

    if (!doc.is_object()) throw ValidationError(context + ": document must be a JSON object");
    rd.check_keys(doc, context,
                  {"name", "mesh", "material", "loading", "initial", "safe_load", "solver"});
    if (doc.contains("name") && doc["name"].is_string()) sc.name = doc["name"].get<std::string>();

    // --- mesh ---
    if (const Json* m = rd.section("mesh", true)) {
        const std::string kind = rd.str(*m, "mesh", "kind");
        if (kind == "point") {
            sc.mesh.kind = MeshKind::point;
            rd.check_keys(*m, "mesh", {"kind", "tensor_dim", "driven"});
            sc.tensor_dim = rd.integer(*m, "mesh", "tensor_dim", 3);
            const int nv = sc.tensor_dim * (sc.tensor_dim + 1) / 2;
            const auto dr = rd.num_array(*m, "mesh", "driven", nv);
            bool any = false;
            for (double d : dr) {
                if (d != 0.0 && d != 1.0) rd.fail("mesh.driven", "entries must be 0 or 1");
                sc.driven.push_back(d != 0.0);
                any = any || d != 0.0;
            }
            if (!any) rd.fail("mesh.driven", "at least one component must be driven");
        } else if (kind == "segment") {
            sc.mesh.kind = MeshKind::segment;
            rd.check_keys(*m, "mesh", {"kind", "tensor_dim", "n_elems", "length", "boundary_tags"});
            sc.tensor_dim = rd.integer(*m, "mesh", "tensor_dim", 2);
            sc.mesh.n_elems = rd.integer(*m, "mesh", "n_elems");
            sc.mesh.length = rd.num(*m, "mesh", "length");
            if (sc.mesh.n_elems < 1) rd.fail("mesh.n_elems", "must be >= 1");
            if (!(sc.mesh.length > 0.0)) rd.fail("mesh.length", "must be > 0");
        } else if (kind == "rect") {
            sc.mesh.kind = MeshKind::rect;
            rd.check_keys(*m, "mesh", {"kind", "nx", "ny", "lx", "ly", "boundary_tags"});
            sc.tensor_dim = 2;
            sc.mesh.nx = rd.integer(*m, "mesh", "nx");
            sc.mesh.ny = rd.integer(*m, "mesh", "ny");
            sc.mesh.lx = rd.num(*m, "mesh", "lx");
            sc.mesh.ly = rd.num(*m, "mesh", "ly");
            if (sc.mesh.nx < 1 || sc.mesh.ny < 1) rd.fail("mesh.nx", "nx, ny must be >= 1");
            if (!(sc.mesh.lx > 0.0) || !(sc.mesh.ly > 0.0)) rd.fail("mesh.lx", "lx, ly must be > 0");
        } else {
            rd.fail("mesh.kind", "must be \"point\", \"segment\" or \"rect\"");
        }
        if (sc.tensor_dim != 2 && sc.tensor_dim != 3) rd.fail("mesh.tensor_dim", "must be 2 or 3");

        if (kind == "segment" || kind == "rect") {
            const std::vector<std::string> sides = kind == "segment"
                                                       ? std::vector<std::string>{"left", "right"}
                                                       : std::vector<std::string>{"left", "right",
                                                                                  "bottom", "top"};
            bool any_dirichlet = false;
            if (!m->contains("boundary_tags") || !(*m)["boundary_tags"].is_object()) {
                rd.fail("mesh.boundary_tags", "missing required object");
            } else {
                const Json& bt = (*m)["boundary_tags"];
                rd.check_keys(bt, "mesh.boundary_tags",
                              std::set<std::string>(sides.begin(), sides.end()));
                for (const auto& side : sides) {
                    if (!bt.contains(side)) {
                        rd.fail("mesh.boundary_tags." + side, "missing side tag");
                        continue;
                    }
                    const std::string tag = bt[side].is_string() ? bt[side].get<std::string>() : "";
                    if (tag == "dirichlet") {
                        sc.mesh.tags[side] = FacetTag::dirichlet;
                        any_dirichlet = true;
                    } else if (tag == "neumann") {
                        sc.mesh.tags[side] = FacetTag::neumann;
                    } else {
                        rd.fail("mesh.boundary_tags." + side,
                                "must be \"dirichlet\" or \"neumann\"");
                    }
                }
            }
            if (!any_dirichlet && rd.errors.empty())
                rd.fail("mesh.boundary_tags", "at least one side must be dirichlet");
        }
    }
    const int nv = sc.tensor_dim * (sc.tensor_dim + 1) / 2;
    const bool is_point = sc.mesh.kind == MeshKind::point;

    // --- material ---
    if (const Json* m = rd.section("material", true)) {
        rd.check_keys(*m, "material",
                      {"lambda", "mu", "tau", "k", "c_bar", "w_d", "w_grad", "alpha_cap"});
        sc.hooke.lambda = rd.num(*m, "material", "lambda");
        sc.hooke.mu = rd.num(*m, "material", "mu");
        sc.dp.tau = rd.num(*m, "material", "tau");
        sc.dp.k = rd.num(*m, "material", "k");
        sc.dp.dim = sc.tensor_dim;
        sc.law.c_bar = rd.num(*m, "material", "c_bar");
        sc.law.w_d = rd.num(*m, "material", "w_d");
        sc.law.w_grad = rd.num(*m, "material", "w_grad", 0.0);
        sc.law.alpha_cap = rd.num(*m, "material", "alpha_cap", DamageLaw{}.alpha_cap);

        if (!(sc.hooke.mu > 0.0)) rd.fail("material.mu", "must be > 0");
        if (!(sc.hooke.lambda + 2.0 * sc.hooke.mu / sc.tensor_dim > 0.0))
            rd.fail("material.lambda", "lambda + 2 mu / n must be > 0");
        if (!(sc.dp.tau > 0.0)) rd.fail("material.tau", "must be > 0");
        if (!(sc.dp.k > 0.0)) rd.fail("material.k", "must be > 0");
        if (!(sc.law.c_bar > 0.0)) rd.fail("material.c_bar", "must be > 0");
        if (!(sc.law.w_d > 0.0)) rd.fail("material.w_d", "must be > 0");
        if (!(sc.law.w_grad >= 0.0)) rd.fail("material.w_grad", "must be >= 0");
        if (!(sc.law.alpha_cap > 0.0 && sc.law.alpha_cap < 1.0))
            rd.fail("material.alpha_cap", "must lie in (0, 1)");
    }

    // --- loading ---
    if (const Json* l = rd.section("loading", true)) {
        rd.check_keys(*l, "loading", {"time_steps", "horizon", "w", "f", "g"});
        sc.time_steps = rd.integer(*l, "loading", "time_steps");
        sc.horizon = rd.num(*l, "loading", "horizon");
        if (sc.time_steps < 1) rd.fail("loading.time_steps", "must be >= 1");
        if (!(sc.horizon > 0.0)) rd.fail("loading.horizon", "must be > 0");

        if (!l->contains("w")) {
            rd.fail("loading.w", "missing required section");
        } else if ((*l)["w"].is_object()) {
            const Json& w = (*l)["w"];
            if (is_point) {
                rd.check_keys(w, "loading.w", {"values", "scale"});
                sc.w_values = rd.num_array(w, "loading.w", "values", nv);
            } else {
                rd.check_keys(w, "loading.w", {"offset", "grad", "scale"});
                sc.w_offset = rd.num_array(w, "loading.w", "offset", sc.tensor_dim);
                const int md = sc.mesh.kind == MeshKind::segment ? 1 : 2;
                if (w.contains("grad")) {
                    const Json& g = w["grad"];
                    if (!g.is_array() || int(g.size()) != sc.tensor_dim) {
                        rd.fail("loading.w.grad",
                                "expected " + std::to_string(sc.tensor_dim) + " rows");
                    } else {
                        for (int r = 0; r < sc.tensor_dim; ++r) {
                            std::vector<double> row;
                            for (const auto& e : g[r]) row.push_back(e.get<double>());
                            if (int(row.size()) != md)
                                rd.fail("loading.w.grad", "each row needs " + std::to_string(md) +
                                                              " entries");
                            row.resize(md, 0.0);
                            sc.w_grad.push_back(row);
                        }
                    }
                } else {
                    sc.w_grad.assign(sc.tensor_dim, std::vector<double>(md, 0.0));
                }
            }
            sc.w_scale = rd.table(w, "loading.w", "scale");
        } else {
            rd.fail("loading.w", "must be an object");
        }

        if (l->contains("f")) {
            const Json& f = (*l)["f"];
            if (is_point) {
                rd.fail("loading.f", "body forces are not supported on point meshes");
            } else if (f.is_object()) {
                rd.check_keys(f, "loading.f", {"vector", "scale"});
                sc.has_f = true;
                sc.f_vector = rd.num_array(f, "loading.f", "vector", sc.tensor_dim);
                sc.f_scale = rd.table(f, "loading.f", "scale");
            } else {
                rd.fail("loading.f", "must be an object");
            }
        }

        if (l->contains("g")) {
            const Json& g = (*l)["g"];
            if (!g.is_object()) {
                rd.fail("loading.g", "must be an object");
            } else if (is_point) {
                rd.check_keys(g, "loading.g", {"stress", "scale"});
                sc.g_mode = TractionMode::stress;
                sc.g_stress = rd.num_array(g, "loading.g", "stress", nv);
                sc.g_scale = rd.table(g, "loading.g", "scale");
            } else {
                rd.check_keys(g, "loading.g", {"pressure", "traction", "scale"});
                const bool has_p = g.contains("pressure"), has_t = g.contains("traction");
                if (has_p == has_t) {
                    rd.fail("loading.g", "needs exactly one of \"pressure\" or \"traction\"");
                } else if (has_p) {
                    sc.g_mode = TractionMode::pressure;
                    sc.g_pressure = rd.num(g, "loading.g", "pressure");
                } else {
                    sc.g_mode = TractionMode::traction;
                    sc.g_traction = rd.num_array(g, "loading.g", "traction", sc.tensor_dim);
                }
                sc.g_scale = rd.table(g, "loading.g", "scale");
                bool any_neumann = false;
                for (const auto& [side, tag] : sc.mesh.tags)
                    any_neumann = any_neumann || tag == FacetTag::neumann;
                if (!any_neumann) rd.fail("loading.g", "no side is tagged neumann");
            }
        }
    }

    // --- initial ---
    sc.p0_voigt.assign(nv, 0.0);
    if (const Json* ini = rd.section("initial", true)) {
        rd.check_keys(*ini, "initial", {"alpha0", "p0"});
        sc.alpha0 = rd.num(*ini, "initial", "alpha0");
        if (!(sc.alpha0 >= 0.0 && sc.alpha0 <= 1.0)) rd.fail("initial.alpha0", "must lie in [0, 1]");
        if (ini->contains("p0")) sc.p0_voigt = rd.num_array(*ini, "initial", "p0", nv);
    }

    // --- safe_load (optional) ---
    if (const Json* sl = rd.section("safe_load", false)) {
        rd.check_keys(*sl, "safe_load", {"rho", "scale", "tau0"});
        sc.has_safe_load = true;
        sc.rho_voigt = rd.num_array(*sl, "safe_load", "rho", nv);
        sc.rho_scale = rd.table(*sl, "safe_load", "scale");
        sc.tau0 = rd.num(*sl, "safe_load", "tau0");
        if (!(sc.tau0 > 0.0)) rd.fail("safe_load.tau0", "must be > 0");
    }

    // --- solver (optional, defaulted) ---
    if (const Json* so = rd.section("solver", false)) {
        rd.check_keys(*so, "solver",
                      {"tol_altmin", "max_sweeps", "tol_uep", "max_uep_iters", "tol_alpha",
                       "max_alpha_iters", "tol_alpha_sweep", "multi_start", "seed", "cone_tol"});
        SolverParams d;
        sc.solver.tol_altmin = rd.num(*so, "solver", "tol_altmin", d.tol_altmin);
        sc.solver.max_sweeps = rd.integer(*so, "solver", "max_sweeps", d.max_sweeps);
        sc.solver.tol_uep = rd.num(*so, "solver", "tol_uep", d.tol_uep);
        sc.solver.max_uep_iters = rd.integer(*so, "solver", "max_uep_iters", d.max_uep_iters);
        sc.solver.tol_alpha = rd.num(*so, "solver", "tol_alpha", d.tol_alpha);
        sc.solver.max_alpha_iters = rd.integer(*so, "solver", "max_alpha_iters", d.max_alpha_iters);
        sc.solver.tol_alpha_sweep = rd.num(*so, "solver", "tol_alpha_sweep", d.tol_alpha_sweep);
        sc.solver.multi_start = rd.integer(*so, "solver", "multi_start", d.multi_start);
        sc.solver.seed = std::uint64_t(rd.integer(*so, "solver", "seed", int(d.seed)));
        sc.solver.cone_tol = rd.num(*so, "solver", "cone_tol", d.cone_tol);
        if (!(sc.solver.tol_altmin > 0.0)) rd.fail("solver.tol_altmin", "must be > 0");
        if (!(sc.solver.tol_uep > 0.0)) rd.fail("solver.tol_uep", "must be > 0");
        if (!(sc.solver.tol_alpha > 0.0)) rd.fail("solver.tol_alpha", "must be > 0");
        if (!(sc.solver.tol_alpha_sweep > 0.0)) rd.fail("solver.tol_alpha_sweep", "must be > 0");
        if (sc.solver.max_sweeps < 1) rd.fail("solver.max_sweeps", "must be >= 1");
        if (sc.solver.multi_start < 0) rd.fail("solver.multi_start", "must be >= 0");
        if (!(sc.solver.cone_tol >= 0.0)) rd.fail("solver.cone_tol", "must be >= 0");
    }

    if (!rd.errors.empty()) {
        std::ostringstream msg;
        msg << context << ": " << rd.errors.size() << " validation error(s)";
        for (const auto& e : rd.errors) msg << "\n  " << e;
        throw ValidationError(msg.str());
    }
    return sc;
}

inline Scenario parse_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open scenario file: " + path);
    Json doc;
    try {
        in >> doc;
    } catch (const Json::parse_error& e) {
        throw ValidationError(path + ": not valid JSON: " + e.what());
    }
    return parse_scenario_json(doc, path);
}

// A Scenario compiled into the solver's Problem form.  Owns the
// discretization the Problem points to; movable, not copyable.
struct ProblemSetup {
    std::unique_ptr<Discretization> disc;
    Scenario scenario;
    Problem problem;
};

inline ProblemSetup make_problem(Scenario sc) {
    validate_hooke(sc.hooke, sc.tensor_dim);
    validate_drucker_prager(sc.dp);
    validate_damage(sc.law);

    ProblemSetup ps;
    ps.disc = std::make_unique<Discretization>(build_mesh(sc.mesh), sc.tensor_dim, sc.driven);
    ps.scenario = std::move(sc);
    // the lambdas below share ownership of a scenario copy so they stay
    // valid however the setup (and the Problem inside it) is moved around
    const auto sp = std::make_shared<const Scenario>(ps.scenario);
    const Discretization* disc = ps.disc.get();

    Problem pb;
    pb.disc = disc;
    pb.hooke = sp->hooke;
    pb.dp = sp->dp;
    pb.law = sp->law;
    pb.time_steps = sp->time_steps;
    pb.horizon = sp->horizon;
    pb.solver = sp->solver;

    // clamped so the damage subproblem stays convex on the feasible box
    pb.alpha0.assign(disc->n_alpha_nodes(), std::min(sp->alpha0, sp->law.alpha_cap));
    pb.p0.assign(disc->n_elements(), SymTensor::from_voigt(sp->tensor_dim, sp->p0_voigt.data()));

    if (ps.scenario.mesh.kind == MeshKind::point) {
        pb.loading.boundary = [disc, sp](double t) {
            VecX w = VecX::Zero(disc->n_dofs());
            const double sc_t = sp->w_scale(t);
            for (int c = 0; c < disc->n_dofs(); ++c)
                if (disc->is_dirichlet(c)) w[c] = sp->w_values[c] * sc_t;
            return w;
        };
    } else {
        pb.loading.boundary = [disc, sp](double t) {
            return disc->affine_field(sp->w_offset, sp->w_grad) * sp->w_scale(t);
        };
    }

    pb.loading.load = [disc, sp](double t) {
        VecX F = VecX::Zero(disc->n_dofs());
        if (sp->has_f) {
            std::vector<double> f = sp->f_vector;
            const double sc_t = sp->f_scale(t);
            for (double& x : f) x *= sc_t;
            F += disc->body_force_load(f);
        }
        switch (sp->g_mode) {
        case TractionMode::none:
            break;
        case TractionMode::pressure:
            F += disc->traction_load({sp->g_pressure}, true) * sp->g_scale(t);
            break;
        case TractionMode::traction:
            F += disc->traction_load(sp->g_traction, false) * sp->g_scale(t);
            break;
        case TractionMode::stress: {
            const SymTensor G = SymTensor::from_voigt(disc->tensor_dim(), sp->g_stress.data());
            F += disc->stress_pairing_load(G) * sp->g_scale(t);
            break;
        }
        }
        return F;
    };

    ps.problem = std::move(pb);
    return ps;
}

} // namespace geoplast
