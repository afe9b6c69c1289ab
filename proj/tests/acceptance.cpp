// Acceptance checks AC1..AC9. Prints one PASS/FAIL line per criterion and
// exits non-zero if any fails.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "support.hpp"

using namespace mapdse;
using namespace testing_support;

namespace {

using Clock = std::chrono::steady_clock;

struct Verdict {
    bool ok = true;
    std::string detail;
    void fail(const std::string& why) {
        if (ok) detail = why;
        ok = false;
    }
};

unsigned jobs() { return std::max(1u, std::thread::hardware_concurrency()); }

// Brute-force per-processor usage: every task adds its compute cost on its
// own processor, and each channel end adds volume times the local or shared
// rate on the processor of that end.
struct BruteForce {
    const Problem& p;
    const Mapping& m;

    ProcIndex proc_of(const AppGraph& app, const std::string& id) const {
        return m[*p.gene_index(app.name + "/" + id)];
    }
    const Task& find(const AppGraph& app, const std::string& id) const {
        for (const auto& t : app.tasks)
            if (t.id == id) return t;
        throw std::logic_error("no task " + id);
    }
    Cycles channel_end(const AppGraph& app, const Channel& c, ProcIndex a, ProcIndex b) const {
        const Cycles volume = c.tokens_per_firing * find(app, c.src).firings_per_frame;
        return volume * (a == b ? c.cost_local : c.cost_shared);
    }
    std::vector<Cycles> usage() const {
        std::vector<Cycles> u(p.processor_count(), 0);
        for (const auto& app : p.apps()) {
            for (const auto& t : app.tasks) {
                const ProcIndex k = proc_of(app, t.id);
                u[k] += t.firings_per_frame * t.compute_cost.at(p.platform().processors[k].type);
            }
            for (const auto& c : app.channels) {
                const ProcIndex s = proc_of(app, c.src), d = proc_of(app, c.dst);
                u[s] += channel_end(app, c, s, d);
                u[d] += channel_end(app, c, s, d);
            }
        }
        return u;
    }
    // Cost of task `id` placed on k with every other task where m puts it.
    Cycles cost_on(const AppGraph& app, const std::string& id, ProcIndex k) const {
        const Task& t = find(app, id);
        Cycles c = t.firings_per_frame * t.compute_cost.at(p.platform().processors[k].type);
        for (const auto& ch : app.channels) {
            if (ch.src == id && ch.dst == id) {
                c += 2 * channel_end(app, ch, k, k);
            } else if (ch.src == id) {
                c += channel_end(app, ch, k, proc_of(app, ch.dst));
            } else if (ch.dst == id) {
                c += channel_end(app, ch, proc_of(app, ch.src), k);
            }
        }
        return c;
    }
};

Verdict ac1() {
    Verdict v;
    Rng rng(1001);
    std::size_t instances = 0, benefits = 0;
    for (int trial = 0; trial < 1500; ++trial) {
        RandomOptions o;
        o.max_tasks = 12;
        o.max_procs = 4;
        o.multirate = trial % 3 == 0;
        o.acyclic = trial % 2 == 0;
        o.self_loops = trial % 5 == 0;
        o.max_apps = 1 + trial % 2;
        const Problem p = random_problem(rng, o);
        if (p.processor_count() > 4) continue;
        const Mapping m = random_mapping(p, rng);
        const BruteForce bf{p, m};
        ++instances;
        if (pusage(p, m).usage != bf.usage()) v.fail("pusage mismatch in trial " + std::to_string(trial));
        for (std::size_t i = 0; i < p.task_count(); ++i) {
            if (!p.is_free(i)) continue;
            const auto& ref = p.gene_order()[i];
            const AppGraph& app = p.apps()[ref.app];
            const std::string& id = app.tasks[ref.task].id;
            for (ProcIndex y : p.free_processors()) {
                if (y == m[i]) continue;
                const Cycles expect = bf.cost_on(app, id, m[i]) - bf.cost_on(app, id, y);
                if (migration_benefit(p, m, i, m[i], y).benefit != expect) {
                    v.fail("benefit mismatch in trial " + std::to_string(trial));
                }
                ++benefits;
            }
        }
    }
    if (instances < 1000) v.fail("only " + std::to_string(instances) + " instances");
    if (v.ok) {
        v.detail = std::to_string(instances) + " instances, " + std::to_string(benefits) + " benefits, exact";
    }
    return v;
}

Verdict ac2() {
    Verdict v;
    Rng rng(2002);
    std::size_t branch[3] = {0, 0, 0};
    const int calls = 12000;
    for (int trial = 0; trial < calls; ++trial) {
        RandomOptions o;
        o.multirate = trial % 3 == 0;
        o.acyclic = trial % 2 == 0;
        o.self_loops = trial % 7 == 0;
        o.max_apps = 1 + trial % 2;
        const Problem p = random_problem(rng, o);
        const Mapping in = random_mapping(p, rng);
        const auto out = mutate_beg(p, in, rng);
        ++branch[static_cast<int>(out.branch)];
        if (out.migrations > p.task_count() * p.processor_count()) v.fail("migration cap exceeded");
        if (!validate_mapping(p, out.mapping).empty()) v.fail("invalid output mapping");
        if (out.branch != BegBranch::regeneration &&
            makespan(pusage(p, out.mapping)) > makespan(pusage(p, in))) {
            v.fail("makespan increased in trial " + std::to_string(trial));
        }
    }
    if (v.ok) {
        v.detail = std::to_string(calls) + " calls; branches " + std::to_string(branch[0]) + "/" +
                   std::to_string(branch[1]) + "/" + std::to_string(branch[2]) + "; 0 violations";
    }
    return v;
}

Problem scaled(const Problem& p, Cycles c) {
    std::vector<AppGraph> apps = p.apps();
    for (auto& a : apps) {
        for (auto& t : a.tasks)
            for (auto& [type, cost] : t.compute_cost) cost *= c;
        for (auto& ch : a.channels) ch.cost_local *= c, ch.cost_shared *= c;
    }
    Platform plat = p.platform();
    plat.bus_word_cycles *= c;
    return merge_apps(apps, plat);
}

Verdict ac3() {
    Verdict v;
    {
        AppGraph app;
        app.name = "x";
        app.tasks = {task("a", 100)};
        SimConfig cfg;
        cfg.frames = 10;
        cfg.warmup_frames = 0;
        const auto r = simulate(single(app, homogeneous(1)), Mapping{{0}}, cfg);
        if (r.fet != 100.0 || r.tet != 1000) v.fail("single task: fet " + std::to_string(r.fet));
    }
    {
        const auto r = simulate(single(pipeline2(100, 1, 2, 10, 64), homogeneous(2)), Mapping{{0, 0}});
        if (r.fet != 204.0) v.fail("co-mapped pipeline: fet " + std::to_string(r.fet));
    }
    {
        const auto r = simulate(single(pipeline2(100, 1, 2, 10, 2), homogeneous(2, 0)), Mapping{{0, 1}});
        if (r.fet != 110.0) v.fail("split pipeline: fet " + std::to_string(r.fet));
    }
    Rng rng(3003);
    SimConfig checked;
    checked.check_invariants = true;
    int below = 0;
    double worst = 1.0;
    for (int trial = 0; trial < 1000; ++trial) {
        RandomOptions o;
        o.multirate = trial % 2 == 0;
        o.max_apps = 1 + trial % 2;
        const Problem p = random_problem(rng, o);
        const Mapping m = random_mapping(p, rng);
        const auto r = simulate(p, m, checked);
        const Cycles bound = compute_lower_bound(p, m);
        if (r.deadlocked) v.fail("deadlock in trial " + std::to_string(trial));
        for (std::size_t n = 1; n < r.frame_completion.size(); ++n) {
            if (r.frame_completion[n] < bound * static_cast<Cycles>(n)) v.fail("prefix bound broken");
        }
        if (r.fet < static_cast<double>(bound)) {
            ++below;
            worst = std::min(worst, r.fet / static_cast<double>(bound));
        }
        // fet is window_cycles / window_frames; compare the exact integers
        const auto s = simulate(scaled(p, 7), m);
        if (s.window_cycles != 7 * r.window_cycles || s.tet != 7 * r.tet) {
            v.fail("scaling by 7 broken in trial " + std::to_string(trial));
        }
    }
    if (below > 0) {
        std::ostringstream d;
        d << "windowed fet below the busiest processor's load on " << below << "/1000 instances (worst ratio "
          << worst << "); C(n) >= n * load holds on all";
        v.fail(d.str());
    }
    if (v.ok) v.detail = "fet 100/204/110 exact; bound and x7 scaling on 1000 instances";
    return v;
}

Verdict ac4() {
    Verdict v;
    const Problem p = load_problem(source_path("benchmarks/tiny8x3.json"));
    const SimConfig sim;
    const auto rep = exhaustive(p, sim, 1'000'000, jobs());
    if (rep.records.size() != 6561) v.fail("space is " + std::to_string(rep.records.size()));
    double best = std::numeric_limits<double>::infinity();
    for (const auto& r : rep.records) best = std::min(best, r.objective);
    if (rep.optimum_objective != best) v.fail("reported optimum is not the minimum");
    GaConfig cfg = ga_preset("beg");
    cfg.pop_size = 8;
    cfg.max_generations = 64;
    cfg.stall_generations = 0;
    int within = 0;
    std::uint64_t max_evals = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        cfg.seed = seed;
        const auto res = evolve(p, cfg, simulator_evaluator(p, sim));
        if (res.log.final_objective < best) v.fail("GA beat the exhaustive optimum");
        if (res.log.final_objective <= 1.05 * best) ++within;
        max_evals = std::max(max_evals, res.log.evaluations);
        if (res.log.evaluations >= 6561) v.fail("seed " + std::to_string(seed) + " used too many evaluations");
    }
    if (within < 9) v.fail(std::to_string(within) + "/10 seeds within 5% of optimum");
    if (v.ok) {
        std::ostringstream d;
        d << "optimum " << best << "; " << within << "/10 seeds within 5%; max evaluations " << max_evals;
        v.detail = d.str();
    }
    return v;
}

ExperimentResult run_presets(const std::string& problem, const std::vector<std::string>& presets) {
    json j = {{"format", 1}, {"problem", problem}, {"repetitions", 10}, {"algorithms", json::array()}};
    for (const auto& name : presets) {
        j["algorithms"].push_back({{"name", name},
                                   {"preset", name},
                                   {"pop_size", 8},
                                   {"crossover_prob", 0.7},
                                   {"mutation_prob_chromosome", 0.8},
                                   {"max_generations", 128}});
    }
    return run_experiment(experiment_from_json(j, source_path("")), RunOptions{jobs(), nullptr});
}

std::string averages(const ExperimentResult& res) {
    std::ostringstream d;
    d.setf(std::ios::fixed);
    d.precision(1);
    for (const auto& row : res.table.rows) {
        d << row.algorithm << " " << row.objective.avg << " (" << row.evaluations.avg << " evals) ";
    }
    return d.str();
}

Verdict ac5() {
    Verdict v;
    const auto res = run_presets("benchmarks/mp3like.json", {"beg", "eg", "ga3sm"});
    const auto *beg = res.table.find("beg"), *eg = res.table.find("eg"), *ga3sm = res.table.find("ga3sm");
    for (const auto* row : {beg, eg, ga3sm}) {
        if (row->failures) v.fail(row->algorithm + " had failed runs");
    }
    if (beg->objective.avg > eg->objective.avg) v.fail("BEG average above EG");
    if (beg->objective.avg > ga3sm->objective.avg) v.fail("BEG average above GA3SM");
    if (beg->evaluations.avg > eg->evaluations.avg) v.fail("BEG uses more evaluations than EG");
    v.detail = (v.ok ? "" : v.detail + "; ") + averages(res);
    return v;
}

Verdict ac6() {
    Verdict v;
    const auto rep = exhaustive(load_problem(source_path("benchmarks/tiny8x3.json")), {}, 1'000'000, jobs());
    if (!(rep.pearson_r > 0.5)) v.fail("r = " + std::to_string(rep.pearson_r));
    if (rep.low_imbalance_mean > rep.high_imbalance_mean) v.fail("low-imbalance half is worse");
    std::ostringstream d;
    d << "r = " << rep.pearson_r << "; quartile " << rep.quartile_size << ", low/high imbalance mean "
      << rep.low_imbalance_mean << " / " << rep.high_imbalance_mean;
    v.detail = (v.ok ? "" : v.detail + "; ") + d.str();
    return v;
}

Verdict ac7() {
    Verdict v;
    const auto res = run_presets("benchmarks/multi.json", {"beg", "eg"});
    const auto *beg = res.table.find("beg"), *eg = res.table.find("eg");
    if (beg->failures || eg->failures) v.fail("failed runs");
    if (beg->objective.avg > eg->objective.avg) v.fail("BEG average TET above EG");
    v.detail = (v.ok ? "" : v.detail + "; ") + averages(res);
    return v;
}

Verdict ac8() {
    Verdict v;
    const Problem p = load_problem(source_path("benchmarks/mp3like.json"));
    json j = {{"format", 1},
              {"problem", "benchmarks/mp3like.json"},
              {"repetitions", 10},
              {"algorithms",
               {{{"name", "BEG"}, {"preset", "beg"}, {"max_generations", 40}},
                {{"name", "EG"}, {"preset", "eg"}, {"max_generations", 40}},
                {{"name", "MCT"}, {"heuristic", "mct"}}}}};
    const auto spec = experiment_from_json(j, source_path(""));
    const auto dir = std::filesystem::temp_directory_path() / "mapdse_ac8";
    std::filesystem::remove_all(dir);
    const auto a = run_experiment(spec, p, RunOptions{1, nullptr});
    const auto b = run_experiment(spec, p, RunOptions{jobs(), nullptr});
    emit_results(dir / "a", &spec, &a, nullptr);
    emit_results(dir / "b", &spec, &b, nullptr);
    auto slurp = [](const std::filesystem::path& f) {
        std::ifstream in(f, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    for (const char* f : {"comparison.csv", "summary.csv", "convergence.csv"}) {
        if (slurp(dir / "a" / f) != slurp(dir / "b" / f) || slurp(dir / "a" / f).empty()) {
            v.fail(std::string(f) + " differs between identical runs");
        }
    }
    std::filesystem::remove_all(dir);
    for (const auto& run : a.runs) {
        for (std::size_t g = 1; g < run.log.generations.size(); ++g) {
            if (run.log.generations[g].best_so_far > run.log.generations[g - 1].best_so_far) {
                v.fail("convergence series increases for " + run.algorithm);
            }
        }
    }
    // survivor instrumentation
    std::size_t generations = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        GaConfig cfg = ga_preset(seed % 2 ? "beg" : "eg");
        cfg.seed = seed;
        cfg.max_generations = 40;
        evolve(p, cfg, simulator_evaluator(p, {}),
               [&](int g, std::span<const Individual> prev, std::span<const Individual> next) {
                   ++generations;
                   std::size_t carried = 0, fresh = 0;
                   for (const auto& ind : next) (ind.born < g ? carried : fresh) += 1;
                   if (carried != 1 || fresh != cfg.pop_size - 1) v.fail("survivor split broken");
                   if (next[0].mapping != prev[best_index(prev)].mapping) v.fail("carried individual is not the elite");
               });
    }
    if (v.ok) v.detail = "CSVs identical across runs; series non-increasing; 1 + (n-1) in " +
                         std::to_string(generations) + " generations over 10 runs";
    return v;
}

Verdict ac9() {
    Verdict v;
    json j = {{"format", 1},
              {"problem", "benchmarks/mp3like.json"},
              {"repetitions", 10},
              {"algorithms",
               {{{"name", "BEG"},
                 {"preset", "beg"},
                 {"sweep", {{"parameter", "mutation_prob_chromosome"}, {"values", {0.1, 0.5, 1.0}}}}}}}};
    const auto spec = experiment_from_json(j, source_path(""));
    const auto res = run_experiment(spec, RunOptions{jobs(), nullptr});
    std::istringstream csv(comparison_csv(res));
    std::string line;
    std::getline(csv, line);
    std::map<std::string, int> rows;
    std::set<std::pair<std::string, std::string>> keys;
    while (std::getline(csv, line)) {
        std::stringstream ss(line);
        std::string algo, rep, seed;
        std::getline(ss, algo, ',');
        std::getline(ss, rep, ',');
        std::getline(ss, seed, ',');
        ++rows[algo];
        keys.insert({algo, seed});
    }
    if (rows.size() != 3 || keys.size() != 30) v.fail("expected 30 rows, one per probability and seed");
    for (const auto& [algo, n] : rows) {
        if (n != 10) v.fail(algo + " has " + std::to_string(n) + " rows");
    }
    v.detail = (v.ok ? "" : v.detail + "; ") + averages(res);
    return v;
}

}  // namespace

int main() {
    struct Criterion {
        const char* name;
        double limit_seconds;
        Verdict (*run)();
    };
    const Criterion criteria[] = {
        {"AC1 usage/benefit oracle", 10, ac1},      {"AC2 mutation safety", 60, ac2},
        {"AC3 simulator ground truth", 30, ac3},    {"AC4 desk-scale optimality", 300, ac4},
        {"AC5 single-app ordering", 1800, ac5},     {"AC6 makespan correlation", 600, ac6},
        {"AC7 multi-app ordering", 2700, ac7},      {"AC8 determinism and elitism", 600, ac8},
        {"AC9 mutation sweep", 1800, ac9},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        const auto t0 = Clock::now();
        Verdict v;
        try {
            v = c.run();
        } catch (const std::exception& e) {
            v.fail(std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
        if (secs > c.limit_seconds) v.fail("took " + std::to_string(secs) + " s");
        char timing[64];
        std::snprintf(timing, sizeof timing, "%.2f s", secs);
        std::cout << (v.ok ? "PASS " : "FAIL ") << c.name << " [" << timing << "] " << v.detail << std::endl;
        failed += !v.ok;
    }
    std::cout << (failed ? "acceptance: " + std::to_string(failed) + " criteria failed" : "acceptance: all passed")
              << std::endl;
    return failed ? 1 : 0;
}
