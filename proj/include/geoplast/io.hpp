#pragma once

// Result persistence.  A run directory holds
//   ledger.csv   one row per accepted time step: every energy-balance term
//                plus per-step residual diagnostics and solver statistics
//   state.json   complete state per snapshot (nodal u and alpha, element
//                e/p/sigma) with the scenario document embedded
// All numbers are written in shortest round-trip decimal form, so reading
// a file back reproduces the exact binary values and identical inputs
// produce identical bytes.

#include <json.hpp>

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "evolution.hpp"

namespace geoplast {

inline constexpr const char* kLedgerSchema = "geoplast-ledger-1";
inline constexpr const char* kStateSchema = "geoplast-state-1";

inline std::string format_double(double x) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s, const std::string& context) {
    double x = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), x);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw IoError(context + ": not a number: '" + s + "'");
    return x;
}

inline const std::vector<std::string>& ledger_columns() {
    static const std::vector<std::string> cols{
        "step",          "t",
        "Q",             "D",
        "grad",          "Qtilde",
        "VH_cum",        "work_sigma_cum",
        "work_load_cum", "load_term",
        "energy_residual", "strain_incr_norm",
        "flow_residual", "flow_residual_stress",
        "yield_residual", "cone_residual",
        "sweeps",        "uep_iterations",
        "alpha_iterations", "incremental_objective"};
    return cols;
}

// Streams ledger rows as they are produced, flushing per row so partial
// output survives a crashed or aborted run.
class LedgerWriter {
public:
    explicit LedgerWriter(const std::string& path) : path_(path), out_(path) {
        if (!out_) throw IoError("cannot open for writing: " + path);
        out_ << "# schema: " << kLedgerSchema << "\n";
        const auto& cols = ledger_columns();
        for (size_t i = 0; i < cols.size(); ++i) out_ << (i ? "," : "") << cols[i];
        out_ << "\n";
        out_.flush();
    }

    void append(int step, const LedgerRow& r) {
        out_ << step << ',' << format_double(r.t) << ',' << format_double(r.Q) << ','
             << format_double(r.D) << ',' << format_double(r.grad) << ','
             << format_double(r.Qtilde) << ',' << format_double(r.VH_cum) << ','
             << format_double(r.work_sigma_cum) << ',' << format_double(r.work_load_cum) << ','
             << format_double(r.load_term) << ',' << format_double(r.energy_residual) << ','
             << format_double(r.strain_incr_norm) << ',' << format_double(r.flow_residual) << ','
             << format_double(r.flow_residual_stress) << ',' << format_double(r.yield_residual)
             << ',' << format_double(r.cone_residual) << ',' << r.sweeps << ','
             << r.uep_iterations << ',' << r.alpha_iterations << ','
             << format_double(r.incremental_objective) << '\n';
        out_.flush();
        if (!out_) throw IoError("write failed: " + path_);
    }

private:
    std::string path_;
    std::ofstream out_;
};

inline void write_ledger_csv(const std::string& path, const std::vector<LedgerRow>& rows) {
    LedgerWriter w(path);
    for (size_t i = 0; i < rows.size(); ++i) w.append(int(i), rows[i]);
}

inline std::vector<LedgerRow> read_ledger_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open for reading: " + path);
    std::string line;
    if (!std::getline(in, line) || line != std::string("# schema: ") + kLedgerSchema)
        throw IoError(path + ": missing or unexpected schema line");
    if (!std::getline(in, line)) throw IoError(path + ": missing header row");
    {
        std::ostringstream expect;
        const auto& cols = ledger_columns();
        for (size_t i = 0; i < cols.size(); ++i) expect << (i ? "," : "") << cols[i];
        if (line != expect.str()) throw IoError(path + ": unexpected column header");
    }

    std::vector<LedgerRow> rows;
    int lineno = 2;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) f.push_back(cell);
        const std::string ctx = path + ":" + std::to_string(lineno);
        if (f.size() != ledger_columns().size())
            throw IoError(ctx + ": expected " + std::to_string(ledger_columns().size()) +
                          " fields, got " + std::to_string(f.size()));
        LedgerRow r;
        const int step = int(parse_double(f[0], ctx));
        if (step != int(rows.size())) throw IoError(ctx + ": non-contiguous step index");
        r.t = parse_double(f[1], ctx);
        r.Q = parse_double(f[2], ctx);
        r.D = parse_double(f[3], ctx);
        r.grad = parse_double(f[4], ctx);
        r.Qtilde = parse_double(f[5], ctx);
        r.VH_cum = parse_double(f[6], ctx);
        r.work_sigma_cum = parse_double(f[7], ctx);
        r.work_load_cum = parse_double(f[8], ctx);
        r.load_term = parse_double(f[9], ctx);
        r.energy_residual = parse_double(f[10], ctx);
        r.strain_incr_norm = parse_double(f[11], ctx);
        r.flow_residual = parse_double(f[12], ctx);
        r.flow_residual_stress = parse_double(f[13], ctx);
        r.yield_residual = parse_double(f[14], ctx);
        r.cone_residual = parse_double(f[15], ctx);
        r.sweeps = int(parse_double(f[16], ctx));
        r.uep_iterations = int(parse_double(f[17], ctx));
        r.alpha_iterations = int(parse_double(f[18], ctx));
        r.incremental_objective = parse_double(f[19], ctx);
        rows.push_back(r);
    }
    return rows;
}

namespace detail {

inline nlohmann::json voigt_json(const SymTensor& s) {
    nlohmann::json a = nlohmann::json::array();
    for (int r = 0; r < s.voigt_size(); ++r) a.push_back(s[r]);
    return a;
}

inline SymTensor voigt_from_json(const nlohmann::json& a, int dim, const std::string& ctx) {
    const int nv = dim * (dim + 1) / 2;
    if (!a.is_array() || int(a.size()) != nv)
        throw IoError(ctx + ": expected a " + std::to_string(nv) + "-entry voigt array");
    std::vector<double> c(a.begin(), a.end());
    return SymTensor::from_voigt(dim, c.data());
}

} // namespace detail

inline nlohmann::json snapshot_to_json(const StateSnapshot& s) {
    nlohmann::json j;
    j["t"] = s.t;
    j["u"] = nlohmann::json::array();
    for (int i = 0; i < s.u.size(); ++i) j["u"].push_back(s.u[i]);
    j["alpha"] = s.alpha;
    for (const char* key : {"e", "p", "sigma"}) {
        const auto& field = key[0] == 'e' ? s.e : (key[0] == 'p' ? s.p : s.sigma);
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& tensor : field) arr.push_back(detail::voigt_json(tensor));
        j[key] = std::move(arr);
    }
    return j;
}

inline StateSnapshot snapshot_from_json(const nlohmann::json& j, int tensor_dim,
                                        const std::string& ctx) {
    StateSnapshot s;
    if (!j.contains("t") || !j.contains("u") || !j.contains("alpha") || !j.contains("e") ||
        !j.contains("p") || !j.contains("sigma"))
        throw IoError(ctx + ": snapshot missing one of t/u/alpha/e/p/sigma");
    s.t = j["t"].get<double>();
    s.u = VecX(j["u"].size());
    for (size_t i = 0; i < j["u"].size(); ++i) s.u[i] = j["u"][i].get<double>();
    s.alpha = j["alpha"].get<std::vector<double>>();
    for (const char* key : {"e", "p", "sigma"}) {
        auto& field = key[0] == 'e' ? s.e : (key[0] == 'p' ? s.p : s.sigma);
        for (const auto& tj : j[key])
            field.push_back(detail::voigt_from_json(tj, tensor_dim, ctx));
    }
    return s;
}

// sidecar with the scenario as authored plus full per-snapshot state
inline void write_state_json(const std::string& path, const nlohmann::json& scenario,
                             const std::vector<StateSnapshot>& snapshots) {
    nlohmann::json j;
    j["schema"] = kStateSchema;
    j["scenario"] = scenario;
    j["snapshots"] = nlohmann::json::array();
    for (const auto& s : snapshots) j["snapshots"].push_back(snapshot_to_json(s));
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << j.dump(1) << "\n";
    if (!out) throw IoError("write failed: " + path);
}

struct StateFile {
    nlohmann::json scenario;
    std::vector<StateSnapshot> snapshots;
};

inline StateFile read_state_json(const std::string& path, int tensor_dim_hint = 0) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open for reading: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw IoError(path + ": not valid JSON: " + e.what());
    }
    if (!j.contains("schema") || j["schema"] != kStateSchema)
        throw IoError(path + ": missing or unexpected schema field");
    if (!j.contains("scenario") || !j.contains("snapshots"))
        throw IoError(path + ": missing scenario or snapshots");
    StateFile f;
    f.scenario = j["scenario"];
    int tdim = tensor_dim_hint;
    if (tdim == 0) {
        // infer from the scenario: rect is planar, others declare it
        const auto& mesh = f.scenario.contains("mesh") ? f.scenario["mesh"] : nlohmann::json();
        if (mesh.contains("kind") && mesh["kind"] == "rect")
            tdim = 2;
        else if (mesh.contains("tensor_dim"))
            tdim = mesh["tensor_dim"].get<int>();
        else
            tdim = mesh.contains("kind") && mesh["kind"] == "segment" ? 2 : 3;
    }
    int idx = 0;
    for (const auto& sj : j["snapshots"])
        f.snapshots.push_back(
            snapshot_from_json(sj, tdim, path + ": snapshot " + std::to_string(idx++)));
    return f;
}

} // namespace geoplast
