// mapdse command line: run experiments, enumerate small mapping spaces,
// generate benchmarks, evaluate single mappings, validate problem files.
//
// Exit codes: 0 ok, 1 usage error, 2 invalid input, 3 runtime failure.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "mapdse/mapdse.hpp"

namespace {

using namespace mapdse;

constexpr int exit_usage = 1;
constexpr int exit_invalid = 2;
constexpr int exit_runtime = 3;

int exit_code_for(const Error& e) {
    const std::string& c = e.code();
    if (c == "E_IO" || c == "E_INVARIANT" || c == "E_EVALUATOR_FAILURE") return exit_runtime;
    return exit_invalid;
}

struct Globals {
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string trace;
    bool quiet = false;
    unsigned jobs = 0;

    unsigned job_count() const { return jobs ? jobs : std::max(1u, std::thread::hardware_concurrency()); }
};

// Loads a problem and fails with exit 2 if it does not validate.
Problem load_valid(const std::string& path) {
    Problem p = load_problem(path);
    auto diags = validate_problem(p);
    for (const auto& d : diags) {
        if (d.severity == Severity::error) std::cerr << format_diagnostic(d) << "\n";
    }
    if (has_errors(diags)) throw Error("E_INVALID_PROBLEM", path + " does not validate");
    return p;
}

void print_table(const ComparisonTable& t) {
    using detail::format_number;
    std::cout << "algorithm,runs,failures,objective_min,objective_avg,objective_max,seconds_avg,evaluations_avg\n";
    for (const auto& r : t.rows) {
        std::cout << r.algorithm << "," << r.runs << "," << r.failures << "," << format_number(r.objective.min) << ","
                  << format_number(r.objective.avg) << "," << format_number(r.objective.max) << ","
                  << format_number(r.seconds.avg) << "," << format_number(r.evaluations.avg) << "\n";
    }
}

int cmd_run(const Globals& g, const std::string& file) {
    ExperimentSpec spec = load_experiment(file);
    if (g.seed) override_seeds(spec, *g.seed);
    if (!g.out.empty()) spec.outputs = g.out;
    Problem problem = load_valid(spec.problem.string());
    RunOptions opts;
    opts.jobs = g.job_count();
    opts.progress = g.quiet ? nullptr : &std::cout;
    ExperimentResult res = run_experiment(spec, problem, opts);
    emit_results(spec.outputs, &spec, &res, nullptr);
    print_table(res.table);
    std::cout << "results in " << spec.outputs.string() << "\n";
    return 0;
}

int cmd_exhaustive(const Globals& g, const std::string& file, std::uint64_t cap, const SimConfig& sim) {
    Problem problem = load_valid(file);
    CorrelationReport rep = exhaustive(problem, sim, cap, g.job_count());
    const std::string dir = g.out.empty() ? "out/exhaustive" : g.out;
    emit_results(dir, nullptr, nullptr, &rep);
    {
        std::cout << "mappings: " << rep.records.size() << "\n"
                  << "pearson_r: " << detail::format_number(rep.pearson_r) << "\n"
                  << "optimum: " << to_string(rep.optimum) << " objective "
                  << detail::format_number(rep.optimum_objective) << "\n"
                  << "low-makespan quarter: low-imbalance mean " << detail::format_number(rep.low_imbalance_mean)
                  << ", high-imbalance mean " << detail::format_number(rep.high_imbalance_mean) << "\n"
                  << "results in " << dir << "\n";
    }
    return 0;
}

int cmd_gen(const Globals& g, const std::string& shape) {
    const std::string text = gen_benchmark_text(shape, g.seed);
    if (g.out.empty()) {
        std::cout << text;
    } else {
        write_text_file(g.out, text);
        if (!g.quiet) std::cout << "wrote " << g.out << "\n";
    }
    return 0;
}

int cmd_eval(const Globals& g, const std::string& file, const std::string& what, const SimConfig& sim) {
    Problem problem = load_valid(file);
    const Mapping m = is_heuristic(what) ? run_heuristic(problem, what) : parse_mapping(problem, what);
    if (auto diags = validate_mapping(problem, m); has_errors(diags)) {
        for (const auto& d : diags) std::cerr << format_diagnostic(d) << "\n";
        throw Error(diags.front().code, "invalid mapping");
    }
    std::ofstream trace_file;
    if (!g.trace.empty()) {
        trace_file.open(g.trace, std::ios::binary);
        if (!trace_file) throw Error("E_IO", "cannot write '" + g.trace + "'");
    }
    const EvalResult r = simulate(problem, m, sim, g.trace.empty() ? nullptr : &trace_file);
    std::cout << "mapping: " << to_string(m) << "\n"
              << "objective: " << detail::format_number(r.objective) << "\n"
              << "fet: " << detail::format_number(r.fet) << "\n"
              << "tet: " << r.tet << "\n"
              << "deadlocked: " << (r.deadlocked ? "true" : "false") << "\n"
              << "events: " << r.events << "\n"
              << "makespan: " << makespan(r.usage) << "\n"
              << "imbalance: " << imbalance(problem, r.usage) << "\n"
              << "usage:";
    for (std::size_t k = 0; k < r.usage.size(); ++k) {
        std::cout << " " << problem.platform().processors[k].id << "=" << r.usage[k];
    }
    std::cout << "\n";
    return 0;
}

int cmd_validate(const std::string& file, const std::string& mapping) {
    Problem problem = load_problem(file);
    auto diags = validate_problem(problem);
    if (!has_errors(diags)) {
        auto dl = check_deadlock_free(problem);
        diags.insert(diags.end(), dl.begin(), dl.end());
        if (!mapping.empty()) {
            auto md = validate_mapping(problem, parse_mapping(problem, mapping));
            diags.insert(diags.end(), md.begin(), md.end());
        }
    }
    for (const auto& d : diags) std::cerr << format_diagnostic(d) << "\n";
    return has_errors(diags) ? exit_invalid : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Mapping design-space exploration for streaming applications on MPSoCs"};
    app.require_subcommand(1, 1);
    app.fallthrough();

    Globals g;
    std::uint64_t seed = 0;
    auto* seed_opt = app.add_option("--seed", seed, "Seed for every stochastic step");
    app.add_option("--out", g.out, "Output directory (run, exhaustive) or file (gen)");
    app.add_option("--trace", g.trace, "Write the simulator event trace (eval)");
    app.add_flag("--quiet", g.quiet, "Suppress progress output");
    app.add_option("--jobs", g.jobs, "Concurrent evaluations (default: all cores)")->check(CLI::NonNegativeNumber);

    SimConfig sim;
    auto add_sim = [&](CLI::App* sub) {
        sub->add_option("--frames", sim.frames, "Simulated frames")->check(CLI::PositiveNumber);
        sub->add_option("--warmup", sim.warmup_frames, "Frames excluded from the measurement")
            ->check(CLI::NonNegativeNumber);
    };

    std::string file, arg;
    auto* run = app.add_subcommand("run", "Run an experiment file");
    run->add_option("experiment", file, "Experiment JSON")->required();

    std::uint64_t cap = 1'000'000;
    auto* exh = app.add_subcommand("exhaustive", "Simulate every mapping of a small problem");
    exh->add_option("problem", file, "Problem JSON")->required();
    exh->add_option("--cap", cap, "Largest mapping space to enumerate");
    add_sim(exh);

    auto* gen = app.add_subcommand("gen", "Generate a benchmark problem (preset, key=value list, or a+b merge)");
    gen->add_option("shape", arg, "Preset name or shape parameters")->required();

    auto* eval = app.add_subcommand("eval", "Simulate one mapping");
    eval->add_option("problem", file, "Problem JSON")->required();
    eval->add_option("mapping", arg, "Comma-separated processors in gene order, or a heuristic name")->required();
    add_sim(eval);

    std::string mapping;
    auto* val = app.add_subcommand("validate", "Check a problem file");
    val->add_option("problem", file, "Problem JSON")->required();
    val->add_option("--mapping", mapping, "Also check this mapping");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : exit_usage;
    }
    if (*seed_opt) g.seed = seed;

    try {
        check_sim_config(sim);
        if (*run) return cmd_run(g, file);
        if (*exh) return cmd_exhaustive(g, file, cap, sim);
        if (*gen) return cmd_gen(g, arg);
        if (*eval) return cmd_eval(g, file, arg, sim);
        if (*val) return cmd_validate(file, mapping);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_runtime;
    }
    return exit_usage;
}
