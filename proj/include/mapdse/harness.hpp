#pragma once

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <limits>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "ga.hpp"
#include "heuristics.hpp"
#include "model.hpp"
#include "problem_io.hpp"
#include "simulator.hpp"

// Experiment files (format 1):
//
//   {
//     "format": 1,
//     "problem": "../benchmarks/mp3like.json",   // relative to this file
//     "repetitions": 10,
//     "base_seed": 1,                             // or "seeds": [..]
//     "sim": {"frames": 12, "warmup_frames": 2},
//     "outputs": "out/table2",
//     "algorithms": [
//       {"name": "BEG", "preset": "beg", "max_generations": 128},
//       {"name": "MCT", "heuristic": "mct"},
//       {"name": "BEG", "preset": "beg",
//        "sweep": {"parameter": "mutation_prob_chromosome", "values": [0.1, 0.5, 1.0]}}
//     ]
//   }
//
// A sweep expands into one algorithm per value, named "BEG@parameter=value".

namespace mapdse {

inline constexpr const char* version = "1.0.0";

struct AlgorithmSpec {
    std::string name;
    std::optional<GaConfig> ga;  // set for GA runs
    std::string heuristic;       // set for constructive heuristics
    json config;                 // echo for the metadata file
};

struct ExperimentSpec {
    std::filesystem::path problem;
    std::vector<AlgorithmSpec> algorithms;
    int repetitions = 10;
    SimConfig sim;
    std::vector<std::uint64_t> seeds;  // one per repetition
    std::filesystem::path outputs = "out";
};

namespace detail {

[[noreturn]] inline void spec_invalid(const std::string& msg) { throw Error("E_SPEC_INVALID", msg); }

template <typename E>
E parse_tag(const json& v, std::initializer_list<std::pair<const char*, E>> tags, const std::string& what) {
    if (!v.is_string()) spec_invalid(what + " must be a string");
    for (const auto& [name, e] : tags) {
        if (v.get<std::string>() == name) return e;
    }
    spec_invalid("unknown " + what + " '" + v.get<std::string>() + "'");
}

inline double as_prob(const json& v, const std::string& key) {
    if (!v.is_number()) spec_invalid(key + " must be a number");
    return v.get<double>();
}

inline std::uint64_t as_count(const json& v, const std::string& key) {
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0) spec_invalid(key + " must be a non-negative integer");
    return v.get<std::uint64_t>();
}

// Applies one GA setting; throws E_SPEC_INVALID on unknown keys or types.
inline void apply_ga_setting(GaConfig& cfg, const std::string& key, const json& v) {
    if (key == "pop_size") cfg.pop_size = as_count(v, key);
    else if (key == "max_generations") cfg.max_generations = static_cast<int>(as_count(v, key));
    else if (key == "stall_generations") cfg.stall_generations = static_cast<int>(as_count(v, key));
    else if (key == "crossover")
        cfg.crossover = parse_tag<CrossoverKind>(v, {{"one_point", CrossoverKind::one_point},
                                                     {"two_point", CrossoverKind::two_point},
                                                     {"uniform", CrossoverKind::uniform}}, key);
    else if (key == "crossover_prob") cfg.crossover_prob = as_prob(v, key);
    else if (key == "mutation")
        cfg.mutation = parse_tag<MutationKind>(v, {{"beg", MutationKind::beg},
                                                   {"gene_random", MutationKind::gene_random},
                                                   {"three_step", MutationKind::three_step}}, key);
    else if (key == "mutation_prob_chromosome") cfg.mutation_prob_chromosome = as_prob(v, key);
    else if (key == "mutation_prob_gene") cfg.mutation_prob_gene = as_prob(v, key);
    else if (key == "selection")
        cfg.selection = parse_tag<SelectionKind>(v, {{"roulette", SelectionKind::roulette},
                                                     {"random", SelectionKind::random},
                                                     {"tournament", SelectionKind::tournament}}, key);
    else if (key == "tournament_size") cfg.tournament_size = as_count(v, key);
    else if (key == "tournament_replacement") {
        if (!v.is_boolean()) spec_invalid(key + " must be a boolean");
        cfg.tournament_replacement = v.get<bool>();
    } else if (key == "init")
        cfg.init = parse_tag<InitKind>(v, {{"random", InitKind::random}, {"seeded_minmin", InitKind::seeded_minmin}},
                                       key);
    else if (key == "fitness_transform") {
        // only the inverse objective is implemented
        parse_tag<int>(v, {{"inverse", 0}}, key);
    } else if (key == "include_communication") {
        if (!v.is_boolean()) spec_invalid(key + " must be a boolean");
        cfg.heuristic.include_communication = v.get<bool>();
    } else if (key == "check_invariants") {
        if (!v.is_boolean()) spec_invalid(key + " must be a boolean");
        cfg.check_invariants = v.get<bool>();
    } else {
        spec_invalid("unknown algorithm setting '" + key + "'");
    }
}

inline std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed);
    return std::string(buf, res.ptr);
}

inline std::vector<AlgorithmSpec> algorithms_from_json(const json& ja) {
    std::string name;
    if (auto it = ja.find("name"); it != ja.end() && it->is_string()) name = it->get<std::string>();
    if (name.empty()) spec_invalid("every algorithm needs a non-empty name");

    const bool has_preset = ja.contains("preset"), has_heur = ja.contains("heuristic");
    if (has_preset == has_heur) spec_invalid("algorithm '" + name + "' needs exactly one of preset or heuristic");

    if (has_heur) {
        if (ja.size() != 2) spec_invalid("heuristic algorithm '" + name + "' takes no settings");
        const json& h = ja["heuristic"];
        if (!h.is_string() || !is_heuristic(h.get<std::string>())) {
            spec_invalid("algorithm '" + name + "': unknown heuristic");
        }
        return {AlgorithmSpec{name, std::nullopt, h.get<std::string>(), ja}};
    }

    GaConfig base;
    try {
        if (!ja["preset"].is_string()) spec_invalid("preset must be a string");
        base = ga_preset(ja["preset"].get<std::string>());
    } catch (const Error& e) {
        if (e.code() == "E_SPEC_INVALID") throw;
        spec_invalid("algorithm '" + name + "': " + e.what());
    }
    const json* sweep = nullptr;
    for (const auto& [key, v] : ja.items()) {
        if (key == "name" || key == "preset") continue;
        if (key == "sweep") {
            sweep = &v;
            continue;
        }
        if (key == "seed") spec_invalid("algorithm '" + name + "': seeds come from the experiment");
        apply_ga_setting(base, key, v);
    }

    std::vector<AlgorithmSpec> out;
    if (!sweep) {
        out.push_back({name, base, "", ja});
    } else {
        if (!sweep->is_object() || !sweep->contains("parameter") || !sweep->contains("values") ||
            !(*sweep)["parameter"].is_string() || !(*sweep)["values"].is_array() || (*sweep)["values"].empty()) {
            spec_invalid("algorithm '" + name + "': sweep needs a parameter and a non-empty values list");
        }
        const std::string param = (*sweep)["parameter"].get<std::string>();
        for (const auto& v : (*sweep)["values"]) {
            GaConfig cfg = base;
            apply_ga_setting(cfg, param, v);
            json echo = ja;
            echo.erase("sweep");
            echo[param] = v;
            const std::string label = v.is_number_float() ? format_number(v.get<double>()) : v.dump();
            out.push_back({name + "@" + param + "=" + label, cfg, "", echo});
        }
    }
    for (auto& a : out) {
        try {
            check_ga_config(*a.ga);
        } catch (const Error& e) {
            spec_invalid("algorithm '" + a.name + "': " + e.what());
        }
    }
    return out;
}

}  // namespace detail

inline SimConfig sim_config_from_json(const json& j) {
    SimConfig sim;
    for (const auto& [key, v] : j.items()) {
        if (key == "frames") sim.frames = static_cast<int>(detail::as_count(v, key));
        else if (key == "warmup_frames") sim.warmup_frames = static_cast<int>(detail::as_count(v, key));
        else if (key == "deadlock_horizon") sim.deadlock_horizon = detail::as_count(v, key);
        else if (key == "check_invariants" && v.is_boolean()) sim.check_invariants = v.get<bool>();
        else detail::spec_invalid("unknown sim setting '" + key + "'");
    }
    try {
        check_sim_config(sim);
    } catch (const Error& e) {
        detail::spec_invalid(e.what());
    }
    return sim;
}

inline json to_json(const SimConfig& sim) {
    return {{"frames", sim.frames}, {"warmup_frames", sim.warmup_frames}, {"deadlock_horizon", sim.deadlock_horizon}};
}

// `base_dir` resolves relative problem and output paths.
inline ExperimentSpec experiment_from_json(const json& j, const std::filesystem::path& base_dir = {}) {
    using detail::spec_invalid;
    if (!j.is_object()) spec_invalid("experiment must be a JSON object");
    if (!j.contains("format") || j["format"] != 1) spec_invalid("experiment file requires \"format\": 1");
    for (const auto& [key, v] : j.items()) {
        static const std::set<std::string> known{"format", "problem", "algorithms", "repetitions", "sim",
                                                 "seeds", "base_seed", "outputs", "description"};
        if (!known.count(key)) spec_invalid("unknown experiment key '" + key + "'");
    }
    ExperimentSpec spec;
    if (!j.contains("problem") || !j["problem"].is_string()) spec_invalid("experiment needs a problem path");
    spec.problem = base_dir / j["problem"].get<std::string>();
    if (j.contains("outputs")) {
        if (!j["outputs"].is_string()) spec_invalid("outputs must be a path");
        spec.outputs = base_dir / j["outputs"].get<std::string>();
    }
    if (j.contains("repetitions")) spec.repetitions = static_cast<int>(detail::as_count(j["repetitions"], "repetitions"));
    if (j.contains("sim")) spec.sim = sim_config_from_json(j["sim"]);

    if (j.contains("seeds") && j.contains("base_seed")) spec_invalid("give either seeds or base_seed, not both");
    if (j.contains("seeds")) {
        if (!j["seeds"].is_array()) spec_invalid("seeds must be a list");
        for (const auto& s : j["seeds"]) spec.seeds.push_back(detail::as_count(s, "seed"));
        if (!j.contains("repetitions")) spec.repetitions = static_cast<int>(spec.seeds.size());
        if (spec.seeds.size() != static_cast<std::size_t>(spec.repetitions)) {
            spec_invalid("seeds must list one seed per repetition");
        }
    } else {
        const std::uint64_t base = j.contains("base_seed") ? detail::as_count(j["base_seed"], "base_seed") : 1;
        for (int r = 0; r < spec.repetitions; ++r) spec.seeds.push_back(base + static_cast<std::uint64_t>(r));
    }
    if (spec.repetitions < 1) spec_invalid("repetitions must be >= 1");

    if (!j.contains("algorithms") || !j["algorithms"].is_array() || j["algorithms"].empty()) {
        spec_invalid("experiment needs a non-empty algorithms list");
    }
    std::set<std::string> names;
    for (const auto& ja : j["algorithms"]) {
        if (!ja.is_object()) spec_invalid("algorithm entries must be objects");
        for (auto& a : detail::algorithms_from_json(ja)) {
            if (!names.insert(a.name).second) spec_invalid("duplicate algorithm name '" + a.name + "'");
            spec.algorithms.push_back(std::move(a));
        }
    }
    return spec;
}

inline ExperimentSpec load_experiment(const std::filesystem::path& path) {
    try {
        return experiment_from_json(read_json_file(path), path.parent_path());
    } catch (const Error& e) {
        if (e.code() == "E_FORMAT") throw Error("E_SPEC_INVALID", e.what());
        throw;
    }
}

// Re-seeds the repetitions as base + i.
inline void override_seeds(ExperimentSpec& spec, std::uint64_t base) {
    spec.seeds.clear();
    for (int r = 0; r < spec.repetitions; ++r) spec.seeds.push_back(base + static_cast<std::uint64_t>(r));
}

// ---------------------------------------------------------------------------
// Running experiments
// ---------------------------------------------------------------------------

struct RunRecord {
    std::string algorithm;
    int rep = 0;
    std::uint64_t seed = 0;
    bool ok = true;
    std::string error;  // error code when !ok
    double objective = std::numeric_limits<double>::quiet_NaN();
    double seconds = 0.0;
    int generations = 0;
    std::uint64_t evaluations = 0;
    Mapping mapping;
    RunLog log;
};

struct Stats {
    double min = 0.0, avg = 0.0, max = 0.0;
};

inline Stats describe(const std::vector<double>& xs) {
    if (xs.empty()) {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        return {nan, nan, nan};
    }
    Stats s{xs.front(), 0.0, xs.front()};
    for (double x : xs) {
        s.min = std::min(s.min, x);
        s.max = std::max(s.max, x);
        s.avg += x;
    }
    s.avg /= static_cast<double>(xs.size());
    // keep min <= avg <= max despite rounding
    s.avg = std::clamp(s.avg, s.min, s.max);
    return s;
}

struct ComparisonRow {
    std::string algorithm;
    std::size_t runs = 0;
    std::size_t failures = 0;
    Stats objective;
    Stats seconds;
    Stats evaluations;
};

struct ComparisonTable {
    std::vector<ComparisonRow> rows;

    const ComparisonRow* find(const std::string& algorithm) const {
        for (const auto& r : rows) {
            if (r.algorithm == algorithm) return &r;
        }
        return nullptr;
    }
};

struct ExperimentResult {
    ComparisonTable table;
    std::vector<RunRecord> runs;
};

inline ComparisonTable summarize(const std::vector<RunRecord>& runs) {
    ComparisonTable t;
    for (const auto& r : runs) {
        if (!t.find(r.algorithm)) {
            ComparisonRow row;
            row.algorithm = r.algorithm;
            t.rows.push_back(std::move(row));
        }
    }
    for (auto& row : t.rows) {
        std::vector<double> obj, sec, ev;
        for (const auto& r : runs) {
            if (r.algorithm != row.algorithm) continue;
            ++row.runs;
            if (!r.ok) {
                ++row.failures;
                continue;
            }
            obj.push_back(r.objective);
            sec.push_back(r.seconds);
            ev.push_back(static_cast<double>(r.evaluations));
        }
        row.objective = describe(obj);
        row.seconds = describe(sec);
        row.evaluations = describe(ev);
    }
    return t;
}

struct RunOptions {
    unsigned jobs = 1;
    std::ostream* progress = nullptr;
};

inline RunRecord run_algorithm(const Problem& problem, const AlgorithmSpec& algo, const SimConfig& sim,
                               int rep, std::uint64_t seed, unsigned jobs = 1) {
    RunRecord rec;
    rec.algorithm = algo.name;
    rec.rep = rep;
    rec.seed = seed;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        if (algo.ga) {
            GaConfig cfg = *algo.ga;
            cfg.seed = seed;
            auto res = evolve(problem, cfg, simulator_evaluator(problem, sim), {}, jobs);
            rec.mapping = res.best;
            rec.objective = res.log.final_objective;
            rec.generations = res.log.generations.back().generation;
            rec.evaluations = res.log.evaluations;
            rec.log = std::move(res.log);
        } else {
            rec.mapping = run_heuristic(problem, algo.heuristic);
            const EvalResult r = simulate(problem, rec.mapping, sim);
            rec.objective = r.objective;
            rec.evaluations = 1;
            rec.log.generations.push_back({0, r.objective, 1, 0.0, 0, 1});
            rec.log.final_mapping = rec.mapping;
            rec.log.final_objective = r.objective;
            rec.log.evaluations = 1;
        }
    } catch (const Error& e) {
        rec.ok = false;
        rec.error = e.code();
    }
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rec;
}

// Every algorithm runs once per seed; GA runs with the same seed share their
// initial population.
inline ExperimentResult run_experiment(const ExperimentSpec& spec, const Problem& problem,
                                       const RunOptions& opts = {}) {
    if (has_errors(validate_problem(problem))) throw Error("E_SPEC_INVALID", "problem file does not validate");
    ExperimentResult out;
    for (const auto& algo : spec.algorithms) {
        for (int rep = 0; rep < spec.repetitions; ++rep) {
            out.runs.push_back(run_algorithm(problem, algo, spec.sim, rep, spec.seeds[static_cast<std::size_t>(rep)],
                                             opts.jobs));
            const auto& r = out.runs.back();
            if (opts.progress) {
                *opts.progress << r.algorithm << " rep " << rep << " seed " << r.seed << ": "
                               << (r.ok ? detail::format_number(r.objective) : r.error) << " (" << r.evaluations
                               << " evaluations)\n";
            }
        }
    }
    out.table = summarize(out.runs);
    return out;
}

inline ExperimentResult run_experiment(const ExperimentSpec& spec, const RunOptions& opts = {}) {
    return run_experiment(spec, load_problem(spec.problem), opts);
}

// ---------------------------------------------------------------------------
// Exhaustive enumeration
// ---------------------------------------------------------------------------

struct CorrelationRecord {
    std::uint64_t index = 0;
    Cycles makespan = 0;
    Cycles imbalance = 0;
    double objective = 0.0;
};

struct CorrelationReport {
    std::vector<CorrelationRecord> records;
    double pearson_r = 0.0;  // makespan vs objective over non-deadlocked mappings
    Mapping optimum;
    double optimum_objective = std::numeric_limits<double>::infinity();
    // Lowest-makespan quarter of the space split at its median imbalance.
    double low_imbalance_mean = 0.0;
    double high_imbalance_mean = 0.0;
    std::size_t quartile_size = 0;
};

// Pearson correlation; 0 when either series is constant.
inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    if (n < 2) return 0.0;
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) mx += x[i], my += y[i];
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) return 0.0;
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

// Mapping number `index` in lexicographic order: free genes form the digits
// (last gene fastest) over the free processors; pinned genes stay put.
inline Mapping mapping_at(const Problem& problem, std::uint64_t index) {
    Mapping m{std::vector<ProcIndex>(problem.task_count(), 0)};
    const auto procs = problem.free_processors();
    for (std::size_t i = problem.task_count(); i-- > 0;) {
        if (auto pin = problem.genes()[i].pinned) {
            m.genes[i] = *pin;
            continue;
        }
        m.genes[i] = procs[index % procs.size()];
        index /= procs.size();
    }
    return m;
}

inline CorrelationReport exhaustive(const Problem& problem, const SimConfig& sim, std::uint64_t cap = 1'000'000,
                                    unsigned jobs = 1) {
    const BigInt space = mapping_space_size(problem);
    if (space > cap) {
        throw Error("E_SPACE_TOO_LARGE", "mapping space of " + space.str() + " exceeds cap " + std::to_string(cap));
    }
    const auto count = static_cast<std::uint64_t>(space);
    CorrelationReport rep;
    rep.records.resize(count);

    std::atomic<std::uint64_t> next{0};
    std::exception_ptr failure;
    std::atomic<bool> failed{false};
    auto work = [&] {
        for (std::uint64_t i = next++; i < count && !failed; i = next++) {
            try {
                const Mapping m = mapping_at(problem, i);
                const EvalResult r = simulate(problem, m, sim);
                rep.records[i] = {i, makespan(r.usage), imbalance(problem, r.usage),
                                  r.deadlocked ? std::numeric_limits<double>::infinity() : r.objective};
            } catch (...) {
                if (!failed.exchange(true)) failure = std::current_exception();
            }
        }
    };
    {
        std::vector<std::jthread> pool;
        for (unsigned t = 1; t < std::max(1u, jobs); ++t) pool.emplace_back(work);
        work();
    }
    if (failure) std::rethrow_exception(failure);

    std::vector<double> xs, ys;
    for (const auto& r : rep.records) {
        if (r.objective < rep.optimum_objective) {
            rep.optimum_objective = r.objective;
            rep.optimum = mapping_at(problem, r.index);
        }
        if (std::isfinite(r.objective)) {
            xs.push_back(static_cast<double>(r.makespan));
            ys.push_back(r.objective);
        }
    }
    rep.pearson_r = pearson(xs, ys);

    std::vector<const CorrelationRecord*> by_ms;
    for (const auto& r : rep.records) {
        if (std::isfinite(r.objective)) by_ms.push_back(&r);
    }
    std::stable_sort(by_ms.begin(), by_ms.end(),
                     [](auto* a, auto* b) { return a->makespan < b->makespan; });
    rep.quartile_size = (by_ms.size() + 3) / 4;
    by_ms.resize(rep.quartile_size);
    std::stable_sort(by_ms.begin(), by_ms.end(),
                     [](auto* a, auto* b) { return a->imbalance < b->imbalance; });
    const std::size_t half = by_ms.size() / 2;
    double lo = 0, hi = 0;
    for (std::size_t i = 0; i < by_ms.size(); ++i) (i < half ? lo : hi) += by_ms[i]->objective;
    rep.low_imbalance_mean = half ? lo / static_cast<double>(half) : 0.0;
    rep.high_imbalance_mean = by_ms.size() > half ? hi / static_cast<double>(by_ms.size() - half) : 0.0;
    return rep;
}

// ---------------------------------------------------------------------------
// Output files
// ---------------------------------------------------------------------------

inline std::string comparison_csv(const ExperimentResult& res) {
    using detail::format_number;
    std::string s = "algorithm,rep,seed,objective,generations,evaluations,status\n";
    for (const auto& r : res.runs) {
        s += r.algorithm + "," + std::to_string(r.rep) + "," + std::to_string(r.seed) + "," +
             (r.ok ? format_number(r.objective) : "") + "," + std::to_string(r.generations) + "," +
             std::to_string(r.evaluations) + "," + (r.ok ? "ok" : r.error) + "\n";
    }
    return s;
}

inline std::string summary_csv(const ExperimentResult& res) {
    using detail::format_number;
    std::string s = "algorithm,runs,failures,objective_min,objective_avg,objective_max,evaluations_avg\n";
    for (const auto& r : res.table.rows) {
        s += r.algorithm + "," + std::to_string(r.runs) + "," + std::to_string(r.failures) + "," +
             format_number(r.objective.min) + "," + format_number(r.objective.avg) + "," +
             format_number(r.objective.max) + "," + format_number(r.evaluations.avg) + "\n";
    }
    return s;
}

inline std::string convergence_csv(const ExperimentResult& res) {
    using detail::format_number;
    std::string s = "algorithm,rep,generation,best_so_far,evaluations\n";
    for (const auto& r : res.runs) {
        for (const auto& g : r.log.generations) {
            s += r.algorithm + "," + std::to_string(r.rep) + "," + std::to_string(g.generation) + "," +
                 format_number(g.best_so_far) + "," + std::to_string(g.evaluations) + "\n";
        }
    }
    return s;
}

inline std::string correlation_csv(const CorrelationReport& rep) {
    std::string s = "mapping_index,makespan,imbalance,objective\n";
    for (const auto& r : rep.records) {
        s += std::to_string(r.index) + "," + std::to_string(r.makespan) + "," + std::to_string(r.imbalance) + "," +
             detail::format_number(r.objective) + "\n";
    }
    return s;
}

// Machine-dependent facts (wall time) live here so the CSVs stay
// reproducible.
inline json run_metadata(const ExperimentSpec* spec, const ExperimentResult* res, const CorrelationReport* rep) {
    json meta = {{"tool", "mapdse"}, {"version", version}};
    if (spec) {
        json algos = json::array();
        for (const auto& a : spec->algorithms) algos.push_back({{"name", a.name}, {"config", a.config}});
        meta["experiment"] = {{"problem", spec->problem.generic_string()},
                              {"repetitions", spec->repetitions},
                              {"seeds", spec->seeds},
                              {"sim", to_json(spec->sim)},
                              {"algorithms", std::move(algos)}};
    }
    if (res) {
        json timing = json::array();
        for (const auto& row : res->table.rows) {
            timing.push_back({{"algorithm", row.algorithm},
                              {"seconds_min", row.seconds.min},
                              {"seconds_avg", row.seconds.avg},
                              {"seconds_max", row.seconds.max}});
        }
        json runs = json::array();
        for (const auto& r : res->runs) {
            runs.push_back({{"algorithm", r.algorithm}, {"rep", r.rep}, {"seconds", r.seconds},
                            {"mapping", to_string(r.mapping)},
                            {"termination", to_string(r.log.termination)}});
        }
        meta["timing"] = std::move(timing);
        meta["runs"] = std::move(runs);
    }
    if (rep) {
        meta["correlation"] = {{"records", rep->records.size()},
                               {"pearson_r", rep->pearson_r},
                               {"optimum", to_string(rep->optimum)},
                               {"optimum_objective", rep->optimum_objective},
                               {"quartile_size", rep->quartile_size},
                               {"low_imbalance_mean", rep->low_imbalance_mean},
                               {"high_imbalance_mean", rep->high_imbalance_mean}};
    }
    return meta;
}

// Writes comparison/summary/convergence CSVs when `res` is given,
// correlation.csv when `rep` is given, and metadata.json always.
inline void emit_results(const std::filesystem::path& dir, const ExperimentSpec* spec, const ExperimentResult* res,
                         const CorrelationReport* rep) {
    try {
        std::filesystem::create_directories(dir);
    } catch (const std::filesystem::filesystem_error& e) {
        throw Error("E_IO", e.what());
    }
    if (res) {
        write_text_file(dir / "comparison.csv", comparison_csv(*res));
        write_text_file(dir / "summary.csv", summary_csv(*res));
        write_text_file(dir / "convergence.csv", convergence_csv(*res));
    }
    if (rep) write_text_file(dir / "correlation.csv", correlation_csv(*rep));
    write_text_file(dir / "metadata.json", run_metadata(spec, res, rep).dump(2) + "\n");
}

}  // namespace mapdse
