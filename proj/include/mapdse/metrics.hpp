#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "model.hpp"

namespace mapdse {

// Per-processor workload of a mapping, indexed by processor.
struct UsageVector {
    std::vector<Cycles> usage;

    Cycles operator[](std::size_t k) const { return usage[k]; }
    std::size_t size() const { return usage.size(); }
    bool operator==(const UsageVector&) const = default;
};

struct MigrationBenefit {
    std::size_t task = 0;
    ProcIndex from = 0;
    ProcIndex to = 0;
    Cycles cost_from = 0;  // cost of the task placed on `from`
    Cycles cost_to = 0;    // cost of the task placed on `to`
    Cycles benefit = 0;    // cost_from - cost_to
};

// Cost of running `gene` on processor `proc` with every peer where `m`
// places it: compute for one frame plus, for each incident channel, the
// per-frame token volume at the local or shared rate. A self-loop is charged
// once per endpoint, always at the local rate.
inline Cycles placement_cost(const Problem& problem, const Mapping& m, std::size_t gene,
                             ProcIndex proc) {
    const Gene& g = problem.genes()[gene];
    Cycles cost = g.cost[proc] * g.firings;
    for (const Incidence& inc : problem.incident(gene)) {
        const Link& l = problem.links()[inc.link];
        const std::size_t peer = inc.outgoing ? l.dst : l.src;
        const ProcIndex peer_proc = peer == gene ? proc : m[peer];
        cost += l.volume * l.cost_per_token(peer_proc == proc);
    }
    return cost;
}

// Processor usage: compute of every task on its processor plus each
// channel's cost charged to both the writer's and the reader's processor.
inline UsageVector pusage(const Problem& problem, const Mapping& m) {
    UsageVector u{std::vector<Cycles>(problem.processor_count(), 0)};
    const auto& genes = problem.genes();
    for (std::size_t i = 0; i < genes.size(); ++i) u.usage[m[i]] += genes[i].cost[m[i]] * genes[i].firings;
    for (const Link& l : problem.links()) {
        const Cycles c = l.volume * l.cost_per_token(m[l.src] == m[l.dst]);
        u.usage[m[l.src]] += c;
        u.usage[m[l.dst]] += c;
    }
    return u;
}

inline MigrationBenefit migration_benefit(const Problem& problem, const Mapping& m, std::size_t task,
                                          ProcIndex from, ProcIndex to) {
    if (m[task] != from) {
        throw Error("E_NOT_MAPPED_ON_FROM", problem.genes()[task].qualified_id +
                                                " is not mapped on processor " + std::to_string(from));
    }
    if (to == from) throw Error("E_SAME_PROCESSOR", "migration target equals source");
    MigrationBenefit b{task, from, to, placement_cost(problem, m, task, from),
                       placement_cost(problem, m, task, to), 0};
    b.benefit = b.cost_from - b.cost_to;
    return b;
}

inline Cycles makespan(const UsageVector& u) {
    return u.usage.empty() ? 0 : *std::max_element(u.usage.begin(), u.usage.end());
}

// Spread max - min over all processors.
inline Cycles imbalance(const UsageVector& u) {
    if (u.usage.empty()) return 0;
    auto [lo, hi] = std::minmax_element(u.usage.begin(), u.usage.end());
    return *hi - *lo;
}

// Spread over the processors eligible for free tasks; reserved processors
// do not take part in balancing.
inline Cycles imbalance(const Problem& problem, const UsageVector& u) {
    const auto procs = problem.free_processors();
    if (procs.empty()) return imbalance(u);
    Cycles lo = u[procs.front()], hi = lo;
    for (ProcIndex k : procs) {
        lo = std::min(lo, u[k]);
        hi = std::max(hi, u[k]);
    }
    return hi - lo;
}

// Population variance of usage over free processors.
inline double usage_variance(const Problem& problem, const UsageVector& u) {
    const auto procs = problem.free_processors();
    if (procs.empty()) return 0.0;
    double mean = 0.0;
    for (ProcIndex k : procs) mean += static_cast<double>(u[k]);
    mean /= static_cast<double>(procs.size());
    double var = 0.0;
    for (ProcIndex k : procs) var += (static_cast<double>(u[k]) - mean) * (static_cast<double>(u[k]) - mean);
    return var / static_cast<double>(procs.size());
}

// Usage after moving `task` to `to`, derived incrementally from `u`.
// Only the source, the target and the processors of co-located peers change.
inline UsageVector usage_after_move(const Problem& problem, const Mapping& m, const UsageVector& u,
                                    std::size_t task, ProcIndex to) {
    UsageVector out = u;
    const ProcIndex from = m[task];
    if (from == to) return out;
    const Gene& g = problem.genes()[task];
    out.usage[from] -= g.cost[from] * g.firings;
    out.usage[to] += g.cost[to] * g.firings;
    for (const Incidence& inc : problem.incident(task)) {
        const Link& l = problem.links()[inc.link];
        const std::size_t peer = inc.outgoing ? l.dst : l.src;
        if (peer == task) {
            // self-loop: this endpoint moves with the task and stays local
            out.usage[from] -= l.volume * l.cost_local;
            out.usage[to] += l.volume * l.cost_local;
            continue;
        }
        const ProcIndex pp = m[peer];
        const Cycles before = l.volume * l.cost_per_token(pp == from);
        const Cycles after = l.volume * l.cost_per_token(pp == to);
        out.usage[from] -= before;  // this task's endpoint
        out.usage[to] += after;
        out.usage[pp] += after - before;  // the peer's endpoint
    }
    return out;
}

}  // namespace mapdse
