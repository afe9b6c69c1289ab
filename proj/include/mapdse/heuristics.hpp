#pragma once

#include <algorithm>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "metrics.hpp"
#include "model.hpp"

namespace mapdse {

struct HeuristicOptions {
    // Count communication with already-placed peers in completion times and
    // loads. When false, only compute cost is considered.
    bool include_communication = true;
};

// Processor loads accumulated while a mapping is built task by task.
struct LoadState {
    std::vector<Cycles> ready_time;
    bool operator==(const LoadState&) const = default;
};

// A mapping under construction.
struct PartialMapping {
    Mapping mapping;
    std::vector<bool> placed;
    LoadState load;

    explicit PartialMapping(const Problem& problem)
        : mapping{std::vector<ProcIndex>(problem.task_count(), 0)},
          placed(problem.task_count(), false),
          load{std::vector<Cycles>(problem.processor_count(), 0)} {}
};

// Cost of `gene` on `proc` counting only channels to peers already placed.
inline Cycles partial_cost(const Problem& problem, const PartialMapping& pm, std::size_t gene,
                           ProcIndex proc, const HeuristicOptions& opts = {}) {
    const Gene& g = problem.genes()[gene];
    Cycles cost = g.cost[proc] * g.firings;
    if (!opts.include_communication) return cost;
    for (const Incidence& inc : problem.incident(gene)) {
        const Link& l = problem.links()[inc.link];
        const std::size_t peer = inc.outgoing ? l.dst : l.src;
        if (peer == gene) {
            cost += l.volume * l.cost_local;
        } else if (pm.placed[peer]) {
            cost += l.volume * l.cost_per_token(pm.mapping[peer] == proc);
        }
    }
    return cost;
}

// Places `gene` and charges the new channel costs to both endpoints.
inline void assign(const Problem& problem, PartialMapping& pm, std::size_t gene, ProcIndex proc,
                   const HeuristicOptions& opts = {}) {
    const Gene& g = problem.genes()[gene];
    pm.mapping[gene] = proc;
    pm.placed[gene] = true;
    pm.load.ready_time[proc] += g.cost[proc] * g.firings;
    if (!opts.include_communication) return;
    for (const Incidence& inc : problem.incident(gene)) {
        const Link& l = problem.links()[inc.link];
        const std::size_t peer = inc.outgoing ? l.dst : l.src;
        if (peer == gene) {
            pm.load.ready_time[proc] += l.volume * l.cost_local;
        } else if (pm.placed[peer]) {
            const Cycles c = l.volume * l.cost_per_token(pm.mapping[peer] == proc);
            pm.load.ready_time[proc] += c;
            pm.load.ready_time[pm.mapping[peer]] += c;
        }
    }
}

// Loads of a partial mapping computed from scratch.
inline LoadState recompute_load(const Problem& problem, const PartialMapping& pm,
                                const HeuristicOptions& opts = {}) {
    LoadState s{std::vector<Cycles>(problem.processor_count(), 0)};
    for (std::size_t i = 0; i < problem.task_count(); ++i) {
        if (!pm.placed[i]) continue;
        const ProcIndex k = pm.mapping[i];
        s.ready_time[k] += problem.genes()[i].cost[k] * problem.genes()[i].firings;
    }
    if (!opts.include_communication) return s;
    for (const Link& l : problem.links()) {
        if (!pm.placed[l.src] || !pm.placed[l.dst]) continue;
        const Cycles c = l.volume * l.cost_per_token(pm.mapping[l.src] == pm.mapping[l.dst]);
        s.ready_time[pm.mapping[l.src]] += c;
        s.ready_time[pm.mapping[l.dst]] += c;
    }
    return s;
}

// Earliest completion for `gene` given current loads; ties go to the
// lowest processor index.
inline std::pair<ProcIndex, Cycles> best_completion(const Problem& problem, const PartialMapping& pm,
                                                    std::size_t gene, const HeuristicOptions& opts = {}) {
    ProcIndex best = 0;
    Cycles best_time = std::numeric_limits<Cycles>::max();
    for (ProcIndex k : problem.eligible(gene)) {
        const Cycles t = pm.load.ready_time[k] + partial_cost(problem, pm, gene, k, opts);
        if (t < best_time) {
            best_time = t;
            best = k;
        }
    }
    return {best, best_time};
}

// Minimum Completion Time: greedy pass over `order` (gene indices).
inline Mapping mct(const Problem& problem, std::span<const std::size_t> order,
                   const HeuristicOptions& opts = {}) {
    if (order.size() != problem.task_count()) {
        throw Error("E_BAD_ORDER", "order must list every task exactly once");
    }
    PartialMapping pm(problem);
    for (std::size_t gene : order) {
        if (gene >= problem.task_count() || pm.placed[gene]) {
            throw Error("E_BAD_ORDER", "order must list every task exactly once");
        }
        assign(problem, pm, gene, best_completion(problem, pm, gene, opts).first, opts);
    }
    return pm.mapping;
}

inline Mapping mct(const Problem& problem, const HeuristicOptions& opts = {}) {
    std::vector<std::size_t> order(problem.task_count());
    std::iota(order.begin(), order.end(), 0);
    return mct(problem, order, opts);
}

// Minimum Execution Time: every task on its fastest eligible processor.
inline Mapping met(const Problem& problem) {
    Mapping m{std::vector<ProcIndex>(problem.task_count(), 0)};
    for (std::size_t i = 0; i < problem.task_count(); ++i) {
        const auto& cost = problem.genes()[i].cost;
        const auto elig = problem.eligible(i);
        m[i] = *std::min_element(elig.begin(), elig.end(),
                                 [&](ProcIndex a, ProcIndex b) { return std::tie(cost[a], a) < std::tie(cost[b], b); });
    }
    return m;
}

// Min-Min: repeatedly commit the unmapped task whose best completion time is
// smallest. Ties go to declaration order, then processor index.
inline Mapping min_min(const Problem& problem, const HeuristicOptions& opts = {}) {
    std::vector<std::size_t> pending(problem.task_count());
    std::iota(pending.begin(), pending.end(), 0);
    std::sort(pending.begin(), pending.end(), [&](std::size_t a, std::size_t b) {
        return problem.genes()[a].decl < problem.genes()[b].decl;
    });
    PartialMapping pm(problem);
    while (!pending.empty()) {
        std::size_t pick = 0;
        std::pair<ProcIndex, Cycles> best{0, std::numeric_limits<Cycles>::max()};
        for (std::size_t pos = 0; pos < pending.size(); ++pos) {
            auto cand = best_completion(problem, pm, pending[pos], opts);
            if (cand.second < best.second) {
                best = cand;
                pick = pos;
            }
        }
        assign(problem, pm, pending[pick], best.first, opts);
        pending.erase(pending.begin() + static_cast<std::ptrdiff_t>(pick));
    }
    return pm.mapping;
}

// Approximation of output-rate balancing: in gene order, each task goes to
// the processor that leaves the smallest peak load, then the smallest
// spread between free processors. Loads include communication charged to
// both endpoints.
inline Mapping orb_like(const Problem& problem) {
    PartialMapping pm(problem);
    const auto free = problem.free_processors();
    auto score = [&](const LoadState& s) {
        Cycles peak = *std::max_element(s.ready_time.begin(), s.ready_time.end());
        Cycles lo = std::numeric_limits<Cycles>::max(), hi = 0;
        for (ProcIndex k : free) {
            lo = std::min(lo, s.ready_time[k]);
            hi = std::max(hi, s.ready_time[k]);
        }
        return std::pair{peak, free.empty() ? Cycles{0} : hi - lo};
    };
    for (std::size_t gene = 0; gene < problem.task_count(); ++gene) {
        std::optional<std::pair<Cycles, Cycles>> best;
        ProcIndex choice = 0;
        for (ProcIndex k : problem.eligible(gene)) {
            PartialMapping trial = pm;
            assign(problem, trial, gene, k);
            auto sc = score(trial.load);
            if (!best || sc < *best) {
                best = sc;
                choice = k;
            }
        }
        assign(problem, pm, gene, choice);
    }
    return pm.mapping;
}

// Heuristic by CLI name: mct, met, minmin, orb.
inline Mapping run_heuristic(const Problem& problem, const std::string& name,
                             const HeuristicOptions& opts = {}) {
    if (name == "mct") return mct(problem, opts);
    if (name == "met") return met(problem);
    if (name == "minmin") return min_min(problem, opts);
    if (name == "orb") return orb_like(problem);
    throw Error("E_UNKNOWN_HEURISTIC", "unknown heuristic '" + name + "'");
}

inline bool is_heuristic(const std::string& name) {
    return name == "mct" || name == "met" || name == "minmin" || name == "orb";
}

}  // namespace mapdse
