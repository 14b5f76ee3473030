// Command-line driver: run scenarios, verify stored trajectories, sweep a
// parameter over values, and emit plots.
//
// Exit codes: 0 success, 1 validation/input error, 2 solver failure,
// 3 verification FAIL.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>

#include "geoplast/geoplast.hpp"

namespace fs = std::filesystem;
using namespace geoplast;

namespace {

Json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open file: " + path);
    Json doc;
    try {
        in >> doc;
    } catch (const Json::parse_error& e) {
        throw ValidationError(path + ": not valid JSON: " + std::string(e.what()));
    }
    return doc;
}

void write_json_file(const std::string& path, const Json& j) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << j.dump(1) << "\n";
    if (!out) throw IoError("write failed: " + path);
}

// run one scenario document into out_dir: scenario.json (as run),
// ledger.csv (streamed per step), state.json (complete; partial state is
// still written if the solver aborts mid-run)
void run_document(const Json& doc, const std::string& context, const fs::path& out_dir) {
    Scenario sc = parse_scenario_json(doc, context);
    ProblemSetup ps = make_problem(std::move(sc));
    fs::create_directories(out_dir);
    write_json_file((out_dir / "scenario.json").string(), ps.scenario.raw);

    LedgerWriter ledger((out_dir / "ledger.csv").string());
    std::vector<StateSnapshot> partial;
    size_t rows_written = 0;
    const StepObserver observer = [&](const Trajectory& tr) {
        for (size_t i = rows_written; i < tr.ledger.size(); ++i)
            ledger.append(int(i), tr.ledger[i]);
        rows_written = tr.ledger.size();
        partial = tr.snapshots;
    };

    try {
        const Trajectory tr = run_evolution(ps.problem, observer);
        write_state_json((out_dir / "state.json").string(), ps.scenario.raw, tr.snapshots);
    } catch (const SolverError&) {
        if (!partial.empty())
            write_state_json((out_dir / "state.json").string(), ps.scenario.raw, partial);
        throw;
    }
}

int cmd_run(const std::string& scenario_path, const std::string& out_dir, int steps,
            long long seed) {
    Json doc = load_json_file(scenario_path);
    if (steps > 0) doc["loading"]["time_steps"] = steps;
    if (seed >= 0) doc["solver"]["seed"] = seed;
    run_document(doc, scenario_path, out_dir);
    std::cout << "run complete: " << out_dir << "/ledger.csv, state.json\n";
    return 0;
}

int cmd_verify(const std::string& dir, int samples, long long seed) {
    const StateFile sf = read_state_json(dir + "/state.json");
    const std::vector<LedgerRow> ledger = read_ledger_csv(dir + "/ledger.csv");
    Scenario sc = parse_scenario_json(sf.scenario, dir + "/state.json#scenario");
    const ProblemSetup ps = make_problem(std::move(sc));

    VerifyOptions opt;
    if (samples > 0) opt.n_samples = samples;
    if (seed >= 0) opt.seed = std::uint64_t(seed);
    const VerificationReport rep = verify_trajectory(ps, sf.snapshots, ledger, opt);

    write_json_file(dir + "/verify.json", rep.to_json());
    const std::string text = rep.to_text();
    {
        std::ofstream out(dir + "/verify.txt");
        if (!out) throw IoError("cannot open for writing: " + dir + "/verify.txt");
        out << text;
    }
    std::cout << text;
    return rep.pass ? 0 : 3;
}

int cmd_plot(const std::string& dir) {
    const StateFile sf = read_state_json(dir + "/state.json");
    const std::vector<LedgerRow> ledger = read_ledger_csv(dir + "/ledger.csv");
    Scenario sc = parse_scenario_json(sf.scenario, dir + "/state.json#scenario");
    const ProblemSetup ps = make_problem(std::move(sc));
    for (const auto& path : emit_plots(*ps.disc, sf.snapshots, ledger, dir))
        std::cout << "wrote " << path << "\n";
    return 0;
}

int cmd_sweep(const std::string& scenario_path, const std::string& param,
              const std::string& values_csv, const std::string& out_dir) {
    const Json base = load_json_file(scenario_path);

    std::vector<double> values;
    {
        std::istringstream vs(values_csv);
        std::string cell;
        while (std::getline(vs, cell, ','))
            values.push_back(parse_double(cell, "--values"));
        if (values.empty()) throw ValidationError("--values: no values given");
    }
    std::string pointer = "/" + param;
    for (char& c : pointer)
        if (c == '.') c = '/';

    struct Result {
        fs::path dir;
        int code = 0;
        std::string message = "ok";
    };
    std::vector<Result> results(values.size());
    for (size_t i = 0; i < values.size(); ++i)
        results[i].dir = fs::path(out_dir) / (param + "=" + format_double(values[i]));

    // disjoint output directories, bounded concurrency
    std::mutex next_mutex;
    size_t next = 0;
    const auto worker = [&]() {
        for (;;) {
            size_t i;
            {
                std::lock_guard<std::mutex> lock(next_mutex);
                if (next >= values.size()) return;
                i = next++;
            }
            try {
                Json doc = base;
                doc[Json::json_pointer(pointer)] = values[i];
                run_document(doc, scenario_path + " with " + param + "=" +
                                      format_double(values[i]),
                             results[i].dir);
            } catch (const SolverError& e) {
                results[i].code = 2;
                results[i].message = e.what();
            } catch (const std::exception& e) {
                results[i].code = 1;
                results[i].message = e.what();
            }
        }
    };
    const size_t workers = std::min<size_t>(std::max(1, max_threads()), values.size());
    std::vector<std::thread> pool;
    for (size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();

    int code = 0;
    for (const auto& r : results) {
        std::cout << r.dir.string() << ": " << r.message << "\n";
        code = std::max(code, r.code);
    }
    return code;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"incremental quasistatic plasticity-damage simulator"};
    app.require_subcommand(1);

    std::string scenario_path, dir, param, values;
    int steps = 0, samples = 0;
    long long seed = -1;

    CLI::App* run = app.add_subcommand("run", "run a scenario into an output directory");
    run->add_option("scenario", scenario_path, "scenario JSON file")->required();
    run->add_option("-o,--out", dir, "output directory")->required();
    run->add_option("--steps", steps, "override loading.time_steps");
    run->add_option("--seed", seed, "override solver.seed");

    CLI::App* verify = app.add_subcommand("verify", "verify a stored run directory");
    verify->add_option("dir", dir, "run directory")->required();
    verify->add_option("--samples", samples, "stability competitors per snapshot");
    verify->add_option("--seed", seed, "sampling seed");

    CLI::App* sweep = app.add_subcommand("sweep", "run a scenario for several parameter values");
    sweep->add_option("scenario", scenario_path, "scenario JSON file")->required();
    sweep->add_option("--param", param, "dotted JSON path, e.g. material.k")->required();
    sweep->add_option("--values", values, "comma-separated values")->required();
    sweep->add_option("-o,--out", dir, "output directory")->required();

    CLI::App* plot = app.add_subcommand("plot", "emit SVG plots into a run directory");
    plot->add_option("dir", dir, "run directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (run->parsed()) return cmd_run(scenario_path, dir, steps, seed);
        if (verify->parsed()) return cmd_verify(dir, samples, seed);
        if (sweep->parsed()) return cmd_sweep(scenario_path, param, values, dir);
        if (plot->parsed()) return cmd_plot(dir);
    } catch (const SolverError& e) {
        std::cerr << "solver failure: " << e.what() << "\n";
        return 2;
    } catch (const ValidationError& e) {
        std::cerr << e.what() << "\n";
        return 1;
    } catch (const IoError& e) {
        std::cerr << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
