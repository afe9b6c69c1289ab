#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <thread>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "heuristics.hpp"
#include "metrics.hpp"
#include "model.hpp"
#include "simulator.hpp"

namespace mapdse {

enum class CrossoverKind { one_point, two_point, uniform };
enum class MutationKind { beg, gene_random, three_step };
enum class SelectionKind { roulette, random, tournament };
enum class InitKind { random, seeded_minmin };

struct GaConfig {
    std::size_t pop_size = 8;
    int max_generations = 128;
    int stall_generations = 32;  // 0 disables the stall stop
    CrossoverKind crossover = CrossoverKind::one_point;
    double crossover_prob = 0.7;
    MutationKind mutation = MutationKind::beg;
    double mutation_prob_chromosome = 0.8;
    double mutation_prob_gene = 0.05;  // gene_random only
    SelectionKind selection = SelectionKind::roulette;
    std::size_t tournament_size = 2;
    bool tournament_replacement = false;
    std::uint64_t seed = 1;
    InitKind init = InitKind::random;
    HeuristicOptions heuristic;  // MCT/Min-Min inside mutation and seeding
    bool check_invariants = false;  // assert the BEG makespan guarantee per call
};

// Operator bundles: "beg", "eg", "ga3sm".
inline GaConfig ga_preset(const std::string& name) {
    GaConfig cfg;
    if (name == "beg") return cfg;
    if (name == "eg") {
        cfg.mutation = MutationKind::gene_random;
        return cfg;
    }
    if (name == "ga3sm") {
        cfg.mutation = MutationKind::three_step;
        cfg.init = InitKind::seeded_minmin;
        return cfg;
    }
    throw Error("E_UNKNOWN_PRESET", "unknown GA preset '" + name + "'");
}

inline void check_ga_config(const GaConfig& cfg) {
    auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (cfg.pop_size < 2) throw Error("E_BAD_GA_CONFIG", "pop_size must be >= 2");
    if (cfg.max_generations < 0 || cfg.stall_generations < 0) {
        throw Error("E_BAD_GA_CONFIG", "generation counts must be >= 0");
    }
    if (!prob(cfg.crossover_prob) || !prob(cfg.mutation_prob_chromosome) || !prob(cfg.mutation_prob_gene)) {
        throw Error("E_BAD_GA_CONFIG", "probabilities must lie in [0, 1]");
    }
    if (cfg.selection == SelectionKind::tournament &&
        (cfg.tournament_size < 2 || (!cfg.tournament_replacement && cfg.tournament_size > cfg.pop_size))) {
        throw Error("E_BAD_TOURNAMENT_SIZE", "tournament size must be in [2, pop_size]");
    }
}

// ---------------------------------------------------------------------------
// Individuals and fitness
// ---------------------------------------------------------------------------

// 1 / objective; deadlocked or degenerate objectives get the smallest
// positive fitness.
inline double fitness_from_objective(double objective) {
    if (!std::isfinite(objective) || objective <= 0.0) return std::numeric_limits<double>::min();
    return 1.0 / objective;
}

struct Individual {
    Mapping mapping;
    std::optional<EvalResult> eval;
    int born = 0;  // generation that produced this chromosome

    double objective() const { return eval ? eval->objective : std::numeric_limits<double>::infinity(); }
    double fitness() const { return fitness_from_objective(eval->objective); }
};

// Index of the lowest objective; ties go to the earlier index.
inline std::size_t best_index(std::span<const Individual> pop) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < pop.size(); ++i) {
        if (pop[i].objective() < pop[best].objective()) best = i;
    }
    return best;
}

// ---------------------------------------------------------------------------
// Selection
// ---------------------------------------------------------------------------

inline std::size_t select_roulette(std::span<const Individual> pop, Rng& rng) {
    double total = 0.0;
    for (const auto& ind : pop) {
        if (!ind.eval) throw Error("E_NONPOSITIVE_FITNESS", "individual not evaluated");
        const double f = ind.fitness();
        if (!(f > 0.0)) throw Error("E_NONPOSITIVE_FITNESS", "roulette needs positive fitness");
        total += f;
    }
    const double r = rng.uniform() * total;
    double acc = 0.0;
    for (std::size_t i = 0; i < pop.size(); ++i) {
        acc += pop[i].fitness();
        if (r < acc) return i;
    }
    return pop.size() - 1;
}

inline std::size_t select_random(std::span<const Individual> pop, Rng& rng) {
    return static_cast<std::size_t>(rng.below(pop.size()));
}

// Best of k contenders drawn uniformly, with or without replacement.
inline std::size_t select_tournament(std::span<const Individual> pop, Rng& rng, std::size_t k,
                                     bool with_replacement = false) {
    if (k < 1 || (!with_replacement && k > pop.size())) {
        throw Error("E_BAD_TOURNAMENT_SIZE", "tournament size out of range");
    }
    std::vector<std::size_t> pool(pop.size());
    std::iota(pool.begin(), pool.end(), 0);
    std::optional<std::size_t> best;
    for (std::size_t draw = 0; draw < k; ++draw) {
        std::size_t c;
        if (with_replacement) {
            c = static_cast<std::size_t>(rng.below(pop.size()));
        } else {
            const std::size_t j = draw + static_cast<std::size_t>(rng.below(pool.size() - draw));
            std::swap(pool[draw], pool[j]);
            c = pool[draw];
        }
        if (!best || pop[c].objective() < pop[*best].objective() ||
            (pop[c].objective() == pop[*best].objective() && c < *best)) {
            best = c;
        }
    }
    return *best;
}

// ---------------------------------------------------------------------------
// Crossover
// ---------------------------------------------------------------------------

using Offspring = std::pair<Mapping, Mapping>;

// Children swap tails after `cut` genes (cut in [0, size]).
inline Offspring crossover_one_point_at(const Mapping& a, const Mapping& b, std::size_t cut) {
    Offspring kids{a, b};
    for (std::size_t i = cut; i < a.size(); ++i) std::swap(kids.first[i], kids.second[i]);
    return kids;
}

// Children swap the segment [first, last).
inline Offspring crossover_two_point_at(const Mapping& a, const Mapping& b, std::size_t first, std::size_t last) {
    Offspring kids{a, b};
    for (std::size_t i = first; i < last && i < a.size(); ++i) std::swap(kids.first[i], kids.second[i]);
    return kids;
}

// mask[i] true: first child takes a's gene, second takes b's.
inline Offspring crossover_uniform_mask(const Mapping& a, const Mapping& b, const std::vector<bool>& mask) {
    Offspring kids{a, b};
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!mask[i]) std::swap(kids.first[i], kids.second[i]);
    }
    return kids;
}

inline Offspring crossover_one_point(const Mapping& a, const Mapping& b, Rng& rng) {
    if (a.size() != b.size()) throw Error("E_LENGTH_MISMATCH", "parents differ in length");
    if (a.size() < 2) return {a, b};
    return crossover_one_point_at(a, b, 1 + static_cast<std::size_t>(rng.below(a.size() - 1)));
}

inline Offspring crossover_two_point(const Mapping& a, const Mapping& b, Rng& rng) {
    if (a.size() != b.size()) throw Error("E_LENGTH_MISMATCH", "parents differ in length");
    if (a.size() < 3) return crossover_one_point(a, b, rng);
    // two distinct cut positions in [1, size-1]
    std::size_t c1 = 1 + static_cast<std::size_t>(rng.below(a.size() - 1));
    std::size_t c2 = 1 + static_cast<std::size_t>(rng.below(a.size() - 2));
    if (c2 >= c1) ++c2;
    if (c1 > c2) std::swap(c1, c2);
    return crossover_two_point_at(a, b, c1, c2);
}

inline Offspring crossover_uniform(const Mapping& a, const Mapping& b, Rng& rng) {
    if (a.size() != b.size()) throw Error("E_LENGTH_MISMATCH", "parents differ in length");
    std::vector<bool> mask(a.size());
    for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = rng.chance(0.5);
    return crossover_uniform_mask(a, b, mask);
}

inline Offspring crossover(CrossoverKind kind, const Mapping& a, const Mapping& b, Rng& rng) {
    switch (kind) {
        case CrossoverKind::one_point: return crossover_one_point(a, b, rng);
        case CrossoverKind::two_point: return crossover_two_point(a, b, rng);
        case CrossoverKind::uniform: return crossover_uniform(a, b, rng);
    }
    return {a, b};
}

// ---------------------------------------------------------------------------
// Mutation
// ---------------------------------------------------------------------------

// Each free gene is redrawn uniformly over the free processors with
// probability p_gene.
inline Mapping mutate_gene_random(const Problem& problem, Mapping m, double p_gene, Rng& rng) {
    const auto free = problem.free_processors();
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (!problem.is_free(i)) continue;
        if (rng.chance(p_gene)) m[i] = free[rng.below(free.size())];
    }
    return m;
}

enum class BegBranch { migration, switching, regeneration };

struct BegOutcome {
    Mapping mapping;
    BegBranch branch = BegBranch::migration;
    std::size_t migrations = 0;
};

namespace detail {

// Most loaded free processor, lowest index on ties.
inline std::optional<ProcIndex> busiest_free(const Problem& problem, const UsageVector& u) {
    std::optional<ProcIndex> x;
    for (ProcIndex k : problem.free_processors()) {
        if (!x || u[k] > u[*x]) x = k;
    }
    return x;
}

// Exchanges the free tasks of processors x and y.
inline Mapping switch_processors(const Problem& problem, Mapping m, ProcIndex x, ProcIndex y) {
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (!problem.is_free(i)) continue;
        if (m[i] == x) {
            m[i] = y;
        } else if (m[i] == y) {
            m[i] = x;
        }
    }
    return m;
}

}  // namespace detail

// Heuristic-guided mutation. Three stages, first that yields a new mapping
// wins:
//  1. migration: repeatedly move the task off the busiest processor with the
//     largest migration benefit among moves that do not raise the makespan;
//  2. switching: exchange the busiest processor's tasks with those of the
//     processor that minimizes the resulting makespan (never raising it);
//  3. regeneration: MCT over a shuffled task order.
// Migrations that leave the makespan unchanged with no positive benefit are
// allowed once per (task, processor pair) and the number of migrations is
// capped at tasks * processors, which bounds the loop.
inline BegOutcome mutate_beg(const Problem& problem, const Mapping& input, Rng& rng,
                             const HeuristicOptions& opts = {}, bool check_invariants = false) {
    BegOutcome out{input, BegBranch::migration, 0};
    const std::size_t cap = problem.task_count() * problem.processor_count();
    std::set<std::tuple<std::size_t, ProcIndex, ProcIndex>> plateau_moves;

    while (out.migrations < cap) {
        Mapping& c = out.mapping;
        const UsageVector pu = pusage(problem, c);
        const auto x = detail::busiest_free(problem, pu);
        if (!x) break;
        const Cycles peak = makespan(pu);

        struct Candidate {
            std::size_t task;
            ProcIndex to;
            Cycles benefit;
            bool plateau;
        };
        std::optional<Candidate> best;
        for (std::size_t i = 0; i < c.size(); ++i) {
            if (c[i] != *x || !problem.is_free(i)) continue;
            for (ProcIndex y : problem.free_processors()) {
                if (y == *x) continue;
                const Cycles new_peak = makespan(usage_after_move(problem, c, pu, i, y));
                if (new_peak > peak) continue;
                const Cycles benefit = migration_benefit(problem, c, i, *x, y).benefit;
                const bool plateau = new_peak == peak && benefit <= 0;
                if (plateau && plateau_moves.count({i, std::min(*x, y), std::max(*x, y)})) continue;
                const auto& genes = problem.genes();
                if (!best || benefit > best->benefit ||
                    (benefit == best->benefit && genes[i].decl < genes[best->task].decl)) {
                    best = Candidate{i, y, benefit, plateau};
                }
            }
        }
        if (!best) break;
        if (best->plateau) plateau_moves.insert({best->task, std::min(*x, best->to), std::max(*x, best->to)});
        c[best->task] = best->to;
        ++out.migrations;
    }

    if (out.migrations == 0) {
        const UsageVector pu = pusage(problem, input);
        const Cycles peak = makespan(pu);
        std::optional<std::pair<Cycles, ProcIndex>> best;
        if (const auto x = detail::busiest_free(problem, pu)) {
            for (ProcIndex y : problem.free_processors()) {
                if (y == *x) continue;
                Mapping sw = detail::switch_processors(problem, input, *x, y);
                if (sw == input) continue;
                const Cycles new_peak = makespan(pusage(problem, sw));
                if (new_peak <= peak && (!best || new_peak < best->first)) best = {new_peak, y};
            }
            if (best) {
                out.mapping = detail::switch_processors(problem, input, *x, best->second);
                out.branch = BegBranch::switching;
            }
        }
        if (!best) {
            std::vector<std::size_t> order(problem.task_count());
            std::iota(order.begin(), order.end(), 0);
            rng.shuffle(std::span<std::size_t>(order));
            out.mapping = mct(problem, order, opts);
            out.branch = BegBranch::regeneration;
        }
    }

    if (check_invariants && out.branch != BegBranch::regeneration &&
        makespan(pusage(problem, out.mapping)) > makespan(pusage(problem, input))) {
        throw Error("E_INVARIANT", "heuristic mutation increased the makespan");
    }
    return out;
}

// One of three sub-operators of the three-step mutation:
//  0 reassign a random free task to a random free processor,
//  1 swap the processors of two random free tasks,
//  2 move a random task from the most loaded to the least loaded processor.
inline Mapping three_step_op(const Problem& problem, Mapping m, int op, Rng& rng) {
    std::vector<std::size_t> free_genes;
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (problem.is_free(i)) free_genes.push_back(i);
    }
    const auto procs = problem.free_processors();
    if (free_genes.empty() || procs.empty()) return m;
    switch (op) {
        case 0: {
            const std::size_t i = free_genes[rng.below(free_genes.size())];
            m[i] = procs[rng.below(procs.size())];
            break;
        }
        case 1: {
            const std::size_t i = free_genes[rng.below(free_genes.size())];
            const std::size_t j = free_genes[rng.below(free_genes.size())];
            std::swap(m[i], m[j]);
            break;
        }
        default: {
            const UsageVector u = pusage(problem, m);
            ProcIndex hi = procs.front(), lo = procs.front();
            for (ProcIndex k : procs) {
                if (u[k] > u[hi]) hi = k;
                if (u[k] < u[lo]) lo = k;
            }
            std::vector<std::size_t> on_hi;
            for (std::size_t i : free_genes) {
                if (m[i] == hi) on_hi.push_back(i);
            }
            if (hi != lo && !on_hi.empty()) m[on_hi[rng.below(on_hi.size())]] = lo;
            break;
        }
    }
    return m;
}

inline Mapping mutate_three_step(const Problem& problem, const Mapping& m, Rng& rng) {
    const int op = static_cast<int>(rng.below(3));
    return three_step_op(problem, m, op, rng);
}

// ---------------------------------------------------------------------------
// Evolution loop
// ---------------------------------------------------------------------------

using Evaluator = std::function<EvalResult(const Mapping&)>;

class EvaluatorFailure : public Error {
public:
    EvaluatorFailure(Mapping mapping, const std::string& what)
        : Error("E_EVALUATOR_FAILURE", "mapping " + to_string(mapping) + ": " + what),
          mapping_(std::move(mapping)) {}
    const Mapping& mapping() const { return mapping_; }

private:
    Mapping mapping_;
};

enum class Termination { max_generations, stall };

inline const char* to_string(Termination t) {
    return t == Termination::stall ? "stall" : "max_generations";
}

struct GenerationRecord {
    int generation = 0;
    double best_so_far = 0.0;
    std::uint64_t evaluations = 0;  // cumulative simulator calls
    double wall_seconds = 0.0;      // cumulative
    std::size_t carried = 0;        // individuals kept from the previous population
    std::size_t offspring = 0;      // individuals produced this generation
};

struct RunLog {
    std::vector<GenerationRecord> generations;
    Mapping final_mapping;
    double final_objective = 0.0;
    Termination termination = Termination::max_generations;
    std::uint64_t evaluations = 0;
    std::size_t mutations[3] = {0, 0, 0};  // BEG branch counts: migration, switching, regeneration
};

struct EvolveResult {
    Mapping best;
    RunLog log;
};

// Called after survivor selection with the previous and the new population.
using GenerationObserver =
    std::function<void(int generation, std::span<const Individual> previous, std::span<const Individual> next)>;

namespace detail {

class EvalCache {
public:
    EvalCache(const Evaluator& evaluator, unsigned jobs) : evaluator_(evaluator), jobs_(std::max(1u, jobs)) {}

    // Evaluates every individual in `pop` lacking a result. Distinct unseen
    // chromosomes are simulated once; the rest come from the cache.
    void evaluate(std::vector<Individual>& pop) {
        std::vector<Mapping> todo;
        for (const auto& ind : pop) {
            if (!ind.eval && !cache_.count(ind.mapping) &&
                std::find(todo.begin(), todo.end(), ind.mapping) == todo.end()) {
                todo.push_back(ind.mapping);
            }
        }
        std::vector<std::optional<EvalResult>> results(todo.size());
        std::vector<std::exception_ptr> errors(todo.size());
        auto work = [&](std::size_t i) {
            try {
                results[i] = evaluator_(todo[i]);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        };
        if (jobs_ == 1 || todo.size() < 2) {
            for (std::size_t i = 0; i < todo.size(); ++i) work(i);
        } else {
            std::atomic<std::size_t> next{0};
            std::vector<std::jthread> pool;
            for (unsigned t = 0; t < std::min<std::size_t>(jobs_, todo.size()); ++t) {
                pool.emplace_back([&] {
                    for (std::size_t i = next++; i < todo.size(); i = next++) work(i);
                });
            }
        }
        for (std::size_t i = 0; i < todo.size(); ++i) {
            if (errors[i]) {
                try {
                    std::rethrow_exception(errors[i]);
                } catch (const std::exception& e) {
                    throw EvaluatorFailure(todo[i], e.what());
                }
            }
            cache_.emplace(todo[i], std::move(*results[i]));
        }
        evaluations_ += todo.size();
        for (auto& ind : pop) {
            if (!ind.eval) ind.eval = cache_.at(ind.mapping);
        }
    }

    std::uint64_t evaluations() const { return evaluations_; }

private:
    const Evaluator& evaluator_;
    unsigned jobs_;
    std::unordered_map<Mapping, EvalResult, MappingHash> cache_;
    std::uint64_t evaluations_ = 0;
};

}  // namespace detail

// Initial population: pop_size uniform random chromosomes drawn first from
// a fresh stream seeded with cfg.seed, so every configuration with the same
// seed starts from the same individuals.
inline std::vector<Individual> initial_population(const Problem& problem, const GaConfig& cfg, Rng& rng) {
    std::vector<Individual> pop;
    for (std::size_t i = 0; i < cfg.pop_size; ++i) pop.push_back({random_mapping(problem, rng), std::nullopt, 0});
    return pop;
}

inline EvolveResult evolve(const Problem& problem, const GaConfig& cfg, const Evaluator& evaluator,
                           const GenerationObserver& observer = {}, unsigned jobs = 1) {
    check_ga_config(cfg);
    using Clock = std::chrono::steady_clock;
    const auto t0 = Clock::now();
    auto elapsed = [&] { return std::chrono::duration<double>(Clock::now() - t0).count(); };

    Rng rng(cfg.seed);
    detail::EvalCache cache(evaluator, jobs);
    RunLog log;

    std::vector<Individual> pop = initial_population(problem, cfg, rng);
    cache.evaluate(pop);
    if (cfg.init == InitKind::seeded_minmin) {
        std::size_t worst = 0;
        for (std::size_t i = 1; i < pop.size(); ++i) {
            if (pop[i].objective() > pop[worst].objective()) worst = i;
        }
        pop[worst] = {min_min(problem, cfg.heuristic), std::nullopt, 0};
        cache.evaluate(pop);
    }

    Individual best = pop[best_index(pop)];
    log.generations.push_back({0, best.objective(), cache.evaluations(), elapsed(), 0, pop.size()});

    auto select = [&](std::span<const Individual> p) -> std::size_t {
        switch (cfg.selection) {
            case SelectionKind::roulette: return select_roulette(p, rng);
            case SelectionKind::random: return select_random(p, rng);
            case SelectionKind::tournament:
                return select_tournament(p, rng, cfg.tournament_size, cfg.tournament_replacement);
        }
        return 0;
    };

    int stall = 0;
    for (int g = 1; g <= cfg.max_generations; ++g) {
        const std::size_t need = cfg.pop_size - 1;
        std::vector<Individual> kids;
        for (std::size_t pair = 0; pair < (need + 1) / 2; ++pair) {
            const std::size_t a = select(pop);
            const std::size_t b = select(pop);
            if (!rng.chance(cfg.crossover_prob)) continue;
            auto [c1, c2] = crossover(cfg.crossover, pop[a].mapping, pop[b].mapping, rng);
            repin(problem, c1);
            repin(problem, c2);
            kids.push_back({std::move(c1), std::nullopt, g});
            kids.push_back({std::move(c2), std::nullopt, g});
        }
        if (kids.size() > need) kids.resize(need);
        while (kids.size() < need) kids.push_back({pop[select(pop)].mapping, std::nullopt, g});

        for (auto& kid : kids) {
            if (!rng.chance(cfg.mutation_prob_chromosome)) continue;
            switch (cfg.mutation) {
                case MutationKind::beg: {
                    auto res = mutate_beg(problem, kid.mapping, rng, cfg.heuristic, cfg.check_invariants);
                    ++log.mutations[static_cast<int>(res.branch)];
                    kid.mapping = std::move(res.mapping);
                    break;
                }
                case MutationKind::gene_random:
                    kid.mapping = mutate_gene_random(problem, kid.mapping, cfg.mutation_prob_gene, rng);
                    break;
                case MutationKind::three_step:
                    kid.mapping = mutate_three_step(problem, kid.mapping, rng);
                    break;
            }
        }
        cache.evaluate(kids);

        std::vector<Individual> next;
        next.reserve(cfg.pop_size);
        next.push_back(pop[best_index(pop)]);
        for (auto& kid : kids) next.push_back(std::move(kid));
        if (observer) observer(g, pop, next);
        pop = std::move(next);

        const Individual& gen_best = pop[best_index(pop)];
        if (gen_best.objective() < best.objective()) {
            best = gen_best;
            stall = 0;
        } else {
            ++stall;
        }
        log.generations.push_back({g, best.objective(), cache.evaluations(), elapsed(), 1, need});
        if (cfg.stall_generations > 0 && stall >= cfg.stall_generations) {
            log.termination = Termination::stall;
            break;
        }
    }

    log.final_mapping = best.mapping;
    log.final_objective = best.objective();
    log.evaluations = cache.evaluations();
    return {best.mapping, std::move(log)};
}

// Simulator-backed evaluator.
inline Evaluator simulator_evaluator(const Problem& problem, SimConfig sim) {
    return [&problem, sim](const Mapping& m) { return simulate(problem, m, sim); };
}

}  // namespace mapdse
