#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "core.hpp"

namespace mapdse {

// ---------------------------------------------------------------------------
// Application and platform descriptions, as read from a problem file.
// ---------------------------------------------------------------------------

struct Task {
    std::string id;
    std::map<std::string, Cycles> compute_cost;  // processor type -> cycles per firing
    std::optional<std::string> pinned_to;        // processor id
    int firings_per_frame = 1;
};

// FIFO channel. tokens_per_firing is the producer's output per firing; the
// consumer reads tokens_per_firing * firings(src) / firings(dst) per firing.
struct Channel {
    std::string id;
    std::string src;
    std::string dst;
    int tokens_per_firing = 1;
    Cycles token_size = 1;
    int capacity = 1;
    Cycles cost_local = 0;   // cycles per token when both ends share a processor
    Cycles cost_shared = 0;  // cycles per token through shared memory
    int initial_tokens = 0;
};

struct AppGraph {
    std::string name;
    std::vector<Task> tasks;
    std::vector<Channel> channels;
};

struct Processor {
    std::string id;
    std::string type;
    bool reserved = false;  // only pinned tasks may run here (IO processors)
};

struct Platform {
    std::vector<Processor> processors;
    Cycles bus_word_cycles = 0;
    std::string arbitration = "fcfs";
};

// ---------------------------------------------------------------------------
// Diagnostics
// ---------------------------------------------------------------------------

enum class Severity { warning, error };

struct Diagnostic {
    Severity severity = Severity::error;
    std::string code;
    std::string message;
};

inline bool has_errors(std::span<const Diagnostic> diags) {
    return std::any_of(diags.begin(), diags.end(),
                       [](const Diagnostic& d) { return d.severity == Severity::error; });
}

inline std::string format_diagnostic(const Diagnostic& d) {
    return std::string(d.severity == Severity::error ? "error " : "warning ") + d.code + ": " +
           d.message;
}

struct ValidationOptions {
    bool allow_self_loops = false;
};

// ---------------------------------------------------------------------------
// Mapping chromosome
// ---------------------------------------------------------------------------

struct Mapping {
    std::vector<ProcIndex> genes;  // one processor per gene position

    auto operator<=>(const Mapping&) const = default;
    bool operator==(const Mapping&) const = default;
    std::size_t size() const { return genes.size(); }
    ProcIndex operator[](std::size_t i) const { return genes[i]; }
    ProcIndex& operator[](std::size_t i) { return genes[i]; }
};

struct MappingHash {
    std::size_t operator()(const Mapping& m) const noexcept {
        std::uint64_t h = 1469598103934665603ull;
        for (ProcIndex g : m.genes) {
            h ^= g + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
        }
        return static_cast<std::size_t>(h);
    }
};

inline std::string to_string(const Mapping& m) {
    std::string out;
    for (std::size_t i = 0; i < m.genes.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(m.genes[i]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Problem: merged applications on one platform, resolved into gene order.
// ---------------------------------------------------------------------------

struct TaskRef {
    std::size_t app = 0;
    std::size_t task = 0;  // index into AppGraph::tasks
    bool operator==(const TaskRef&) const = default;
};

// A task in gene position order with costs resolved per processor index.
struct Gene {
    std::string qualified_id;  // "<app>/<task>"
    TaskRef ref;
    std::size_t decl = 0;            // global declaration index
    std::vector<Cycles> cost;        // per processor; 0 where no cost is declared
    std::optional<ProcIndex> pinned;
    int firings = 1;
};

// A resolved channel between two genes.
struct Link {
    std::string id;
    std::size_t src = 0;
    std::size_t dst = 0;
    int produce = 1;  // tokens per producer firing
    int consume = 1;  // tokens per consumer firing
    Cycles volume = 1;  // tokens per frame
    Cycles token_size = 1;
    int capacity = 1;
    int initial_tokens = 0;
    Cycles cost_local = 0;
    Cycles cost_shared = 0;

    Cycles cost_per_token(bool co_mapped) const { return co_mapped ? cost_local : cost_shared; }
};

struct Incidence {
    std::size_t link = 0;
    bool outgoing = false;
};

class Problem {
public:
    const std::vector<AppGraph>& apps() const { return apps_; }
    const Platform& platform() const { return platform_; }
    const std::vector<TaskRef>& gene_order() const { return gene_order_; }
    const std::vector<Gene>& genes() const { return genes_; }
    const std::vector<Link>& links() const { return links_; }
    std::span<const Incidence> incident(std::size_t gene) const { return incident_[gene]; }

    std::size_t task_count() const { return genes_.size(); }
    std::size_t processor_count() const { return platform_.processors.size(); }
    bool multi_app() const { return apps_.size() > 1; }

    // Non-reserved processors, in id order.
    std::span<const ProcIndex> free_processors() const { return free_processors_; }

    // Processors a gene may be placed on.
    std::span<const ProcIndex> eligible(std::size_t gene) const {
        const auto& g = genes_[gene];
        if (g.pinned) return {&*g.pinned, 1};
        return free_processors_;
    }

    bool is_free(std::size_t gene) const { return !genes_[gene].pinned.has_value(); }

    std::size_t free_task_count() const {
        return static_cast<std::size_t>(std::count_if(
            genes_.begin(), genes_.end(), [](const Gene& g) { return !g.pinned; }));
    }

    std::optional<ProcIndex> processor_index(std::string_view id) const {
        for (std::size_t p = 0; p < platform_.processors.size(); ++p) {
            if (platform_.processors[p].id == id) return static_cast<ProcIndex>(p);
        }
        return std::nullopt;
    }

    std::optional<std::size_t> gene_index(std::string_view qualified_id) const {
        for (std::size_t i = 0; i < genes_.size(); ++i) {
            if (genes_[i].qualified_id == qualified_id) return i;
        }
        return std::nullopt;
    }

    friend Problem merge_apps(std::vector<AppGraph> apps, Platform platform);

private:
    std::vector<AppGraph> apps_;
    Platform platform_;
    std::vector<TaskRef> gene_order_;
    std::vector<Gene> genes_;
    std::vector<Link> links_;
    std::vector<std::vector<Incidence>> incident_;
    std::vector<ProcIndex> free_processors_;
};

namespace detail {

inline std::optional<std::size_t> find_task(const AppGraph& app, std::string_view id) {
    for (std::size_t i = 0; i < app.tasks.size(); ++i) {
        if (app.tasks[i].id == id) return i;
    }
    return std::nullopt;
}

// Strongly connected components (iterative Tarjan). Returns component id per
// node; components are numbered in reverse topological order.
inline std::vector<std::size_t> strongly_connected(const std::vector<std::vector<std::size_t>>& adj) {
    const std::size_t n = adj.size();
    constexpr std::size_t unvisited = static_cast<std::size_t>(-1);
    std::vector<std::size_t> index(n, unvisited), low(n, 0), comp(n, unvisited);
    std::vector<bool> on_stack(n, false);
    std::vector<std::size_t> stack;
    std::size_t next_index = 0, next_comp = 0;

    struct Frame {
        std::size_t node;
        std::size_t edge;
    };
    for (std::size_t root = 0; root < n; ++root) {
        if (index[root] != unvisited) continue;
        std::vector<Frame> call{{root, 0}};
        index[root] = low[root] = next_index++;
        stack.push_back(root);
        on_stack[root] = true;
        while (!call.empty()) {
            Frame& f = call.back();
            if (f.edge < adj[f.node].size()) {
                std::size_t w = adj[f.node][f.edge++];
                if (index[w] == unvisited) {
                    index[w] = low[w] = next_index++;
                    stack.push_back(w);
                    on_stack[w] = true;
                    call.push_back({w, 0});
                } else if (on_stack[w]) {
                    low[f.node] = std::min(low[f.node], index[w]);
                }
                continue;
            }
            std::size_t v = f.node;
            call.pop_back();
            if (!call.empty()) low[call.back().node] = std::min(low[call.back().node], low[v]);
            if (low[v] == index[v]) {
                std::size_t w;
                do {
                    w = stack.back();
                    stack.pop_back();
                    on_stack[w] = false;
                    comp[w] = next_comp;
                } while (w != v);
                ++next_comp;
            }
        }
    }
    return comp;
}

}  // namespace detail

// Topological order of an application's tasks (indices into app.tasks).
// Cycles are handled on the strongly-connected-component condensation: among
// ready components the one with the smallest declaration index goes first,
// and tasks inside a component keep declaration order. Channels naming
// missing tasks are ignored.
inline std::vector<std::size_t> topological_order(const AppGraph& app) {
    const std::size_t n = app.tasks.size();
    std::vector<std::vector<std::size_t>> adj(n);
    for (const auto& ch : app.channels) {
        auto s = detail::find_task(app, ch.src);
        auto d = detail::find_task(app, ch.dst);
        if (!s || !d || *s == *d) continue;
        adj[*s].push_back(*d);
    }
    const auto comp = detail::strongly_connected(adj);
    const std::size_t ncomp = n == 0 ? 0 : *std::max_element(comp.begin(), comp.end()) + 1;

    std::vector<std::vector<std::size_t>> members(ncomp);
    for (std::size_t v = 0; v < n; ++v) members[comp[v]].push_back(v);  // ascending decl

    std::vector<std::set<std::size_t>> cadj(ncomp);
    std::vector<std::size_t> indeg(ncomp, 0);
    for (std::size_t v = 0; v < n; ++v) {
        for (std::size_t w : adj[v]) {
            if (comp[v] != comp[w] && cadj[comp[v]].insert(comp[w]).second) ++indeg[comp[w]];
        }
    }

    using Item = std::pair<std::size_t, std::size_t>;  // (first member decl, comp)
    std::priority_queue<Item, std::vector<Item>, std::greater<>> ready;
    for (std::size_t c = 0; c < ncomp; ++c) {
        if (indeg[c] == 0) ready.push({members[c].front(), c});
    }
    std::vector<std::size_t> order;
    order.reserve(n);
    while (!ready.empty()) {
        auto [_, c] = ready.top();
        ready.pop();
        order.insert(order.end(), members[c].begin(), members[c].end());
        for (std::size_t d : cadj[c]) {
            if (--indeg[d] == 0) ready.push({members[d].front(), d});
        }
    }
    return order;
}

// Combine applications onto one platform. Gene order concatenates each
// application's topological order in declaration order of the apps; task ids
// are namespaced as "<app>/<task>".
inline Problem merge_apps(std::vector<AppGraph> apps, Platform platform) {
    if (apps.empty()) throw Error("E_EMPTY_APPS", "at least one application is required");
    {
        std::set<std::string> names;
        for (const auto& a : apps) {
            if (!names.insert(a.name).second) {
                throw Error("E_DUPLICATE_APP_NAME", "application '" + a.name + "' appears twice");
            }
        }
    }

    Problem p;
    p.apps_ = std::move(apps);
    p.platform_ = std::move(platform);
    const auto& procs = p.platform_.processors;

    for (std::size_t k = 0; k < procs.size(); ++k) {
        if (!procs[k].reserved) p.free_processors_.push_back(static_cast<ProcIndex>(k));
    }

    std::size_t decl_base = 0;
    for (std::size_t a = 0; a < p.apps_.size(); ++a) {
        const AppGraph& app = p.apps_[a];
        std::vector<std::size_t> gene_of(app.tasks.size());

        for (std::size_t local : topological_order(app)) {
            const Task& t = app.tasks[local];
            Gene g;
            g.qualified_id = app.name + "/" + t.id;
            g.ref = {a, local};
            g.decl = decl_base + local;
            g.firings = t.firings_per_frame;
            g.cost.resize(procs.size(), 0);
            for (std::size_t k = 0; k < procs.size(); ++k) {
                if (auto it = t.compute_cost.find(procs[k].type); it != t.compute_cost.end()) {
                    g.cost[k] = it->second;
                }
            }
            if (t.pinned_to) {
                for (std::size_t k = 0; k < procs.size(); ++k) {
                    if (procs[k].id == *t.pinned_to) g.pinned = static_cast<ProcIndex>(k);
                }
            }
            gene_of[local] = p.genes_.size();
            p.gene_order_.push_back(g.ref);
            p.genes_.push_back(std::move(g));
        }

        for (const auto& ch : app.channels) {
            auto s = detail::find_task(app, ch.src);
            auto d = detail::find_task(app, ch.dst);
            if (!s || !d) continue;
            Link l;
            l.id = app.name + "/" + ch.id;
            l.src = gene_of[*s];
            l.dst = gene_of[*d];
            l.produce = ch.tokens_per_firing;
            const int fs = app.tasks[*s].firings_per_frame;
            const int fd = app.tasks[*d].firings_per_frame;
            l.volume = static_cast<Cycles>(ch.tokens_per_firing) * fs;
            l.consume = fd > 0 ? static_cast<int>(l.volume / fd) : 0;
            l.token_size = ch.token_size;
            l.capacity = ch.capacity;
            l.initial_tokens = ch.initial_tokens;
            l.cost_local = ch.cost_local;
            l.cost_shared = ch.cost_shared;
            p.links_.push_back(std::move(l));
        }
        decl_base += app.tasks.size();
    }

    p.incident_.resize(p.genes_.size());
    for (std::size_t li = 0; li < p.links_.size(); ++li) {
        p.incident_[p.links_[li].src].push_back({li, true});
        p.incident_[p.links_[li].dst].push_back({li, false});
    }
    return p;
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

inline std::vector<Diagnostic> validate_problem(const Problem& problem,
                                                const ValidationOptions& opts = {}) {
    std::vector<Diagnostic> out;
    auto error = [&](std::string code, std::string msg) {
        out.push_back({Severity::error, std::move(code), std::move(msg)});
    };
    auto warn = [&](std::string code, std::string msg) {
        out.push_back({Severity::warning, std::move(code), std::move(msg)});
    };

    const Platform& plat = problem.platform();
    if (plat.processors.empty()) error("E_NO_PROCESSORS", "platform has no processors");
    {
        std::set<std::string> ids;
        for (const auto& pr : plat.processors) {
            if (!ids.insert(pr.id).second) {
                error("E_DUPLICATE_PROCESSOR", "processor id '" + pr.id + "' is not unique");
            }
        }
    }
    if (plat.bus_word_cycles < 0) error("E_BUS_NEGATIVE", "bus_word_cycles must be >= 0");
    if (plat.arbitration != "fcfs") {
        error("E_BAD_ARBITRATION", "unsupported bus arbitration '" + plat.arbitration + "'");
    }

    for (const AppGraph& app : problem.apps()) {
        const std::string where = "app '" + app.name + "'";
        if (app.tasks.empty()) error("E_NO_TASKS", where + " has no tasks");

        std::set<std::string> task_ids;
        for (const Task& t : app.tasks) {
            const std::string tw = where + " task '" + t.id + "'";
            if (!task_ids.insert(t.id).second) error("E_DUPLICATE_TASK", tw + " is declared twice");
            if (t.firings_per_frame <= 0) error("E_BAD_FIRINGS", tw + " needs firings_per_frame > 0");

            std::optional<std::size_t> pin;
            if (t.pinned_to) {
                for (std::size_t k = 0; k < plat.processors.size(); ++k) {
                    if (plat.processors[k].id == *t.pinned_to) pin = k;
                }
                if (!pin) error("E_PIN_UNKNOWN", tw + " is pinned to unknown processor '" + *t.pinned_to + "'");
            }
            // Costs are required for every processor type the task may run on.
            std::set<std::string> needed;
            if (pin) {
                needed.insert(plat.processors[*pin].type);
            } else if (!t.pinned_to) {
                for (const auto& pr : plat.processors) {
                    if (!pr.reserved) needed.insert(pr.type);
                }
            }
            for (const auto& type : needed) {
                auto it = t.compute_cost.find(type);
                if (it == t.compute_cost.end()) {
                    error("E_COST_INCOMPLETE", tw + " has no compute cost for processor type '" + type + "'");
                } else if (it->second <= 0) {
                    error("E_NONPOSITIVE_COST", tw + " has non-positive cost on type '" + type + "'");
                }
            }
        }

        std::set<std::string> channel_ids;
        for (const Channel& ch : app.channels) {
            const std::string cw = where + " channel '" + ch.id + "'";
            if (!channel_ids.insert(ch.id).second) error("E_DUPLICATE_CHANNEL", cw + " is declared twice");
            auto s = detail::find_task(app, ch.src);
            auto d = detail::find_task(app, ch.dst);
            if (!s) error("E_CHANNEL_DANGLING", cw + " source '" + ch.src + "' is not a task");
            if (!d) error("E_CHANNEL_DANGLING", cw + " destination '" + ch.dst + "' is not a task");
            if (s && d && *s == *d && !opts.allow_self_loops) {
                error("E_SELF_LOOP", cw + " connects a task to itself");
            }
            if (ch.tokens_per_firing <= 0) error("E_BAD_TOKENS", cw + " needs tokens_per_firing > 0");
            if (ch.token_size < 0) error("E_BAD_TOKEN_SIZE", cw + " needs token_size >= 0");
            if (ch.initial_tokens < 0) error("E_BAD_TOKENS", cw + " has negative initial_tokens");
            if (ch.cost_local < 0 || ch.cost_shared < 0) {
                error("E_NEGATIVE_COMM_COST", cw + " has a negative communication cost");
            } else if (ch.cost_local > ch.cost_shared) {
                warn("W_COST_LOCAL_GT_SHARED", cw + " is cheaper through shared memory than locally");
            }
            if (s && d && ch.tokens_per_firing > 0) {
                const auto fs = app.tasks[*s].firings_per_frame;
                const auto fd = app.tasks[*d].firings_per_frame;
                if (fs > 0 && fd > 0) {
                    const long long volume = static_cast<long long>(ch.tokens_per_firing) * fs;
                    if (volume % fd != 0) {
                        error("E_RATE_INCONSISTENT",
                              cw + " per-frame volume is not divisible by the consumer's firings");
                    } else {
                        const long long consume = volume / fd;
                        if (ch.capacity < ch.tokens_per_firing || ch.capacity < consume ||
                            ch.capacity < ch.initial_tokens) {
                            error("E_BAD_CAPACITY", cw + " capacity cannot hold one firing's tokens");
                        }
                    }
                }
            }
            if (ch.capacity <= 0) error("E_BAD_CAPACITY", cw + " needs capacity > 0");
        }
    }

    if (problem.free_task_count() > 0 && problem.free_processors().empty()) {
        error("E_NO_FREE_PROCESSOR", "unpinned tasks exist but every processor is reserved");
    }
    return out;
}

// Checks a chromosome against a problem: length, processor range, pinning
// and reserved processors.
inline std::vector<Diagnostic> validate_mapping(const Problem& problem, const Mapping& m) {
    std::vector<Diagnostic> out;
    if (m.size() != problem.task_count()) {
        out.push_back({Severity::error, "E_BAD_MAPPING_LENGTH",
                       "mapping has " + std::to_string(m.size()) + " genes, problem has " +
                           std::to_string(problem.task_count()) + " tasks"});
        return out;
    }
    const auto& procs = problem.platform().processors;
    for (std::size_t i = 0; i < m.size(); ++i) {
        const auto& g = problem.genes()[i];
        if (m[i] >= procs.size()) {
            out.push_back({Severity::error, "E_BAD_PROCESSOR",
                           g.qualified_id + " mapped to nonexistent processor " + std::to_string(m[i])});
        } else if (g.pinned && m[i] != *g.pinned) {
            out.push_back({Severity::error, "E_PIN_VIOLATED",
                           g.qualified_id + " must stay on " + procs[*g.pinned].id});
        } else if (!g.pinned && procs[m[i]].reserved) {
            out.push_back({Severity::error, "E_RESERVED_PROCESSOR",
                           g.qualified_id + " mapped to reserved processor " + procs[m[i]].id});
        }
    }
    return out;
}

// Parses "0,2,1" (processor indices) or "pe0,pe2,pe1" (processor ids).
inline Mapping parse_mapping(const Problem& problem, std::string_view text) {
    Mapping m;
    std::string item;
    std::istringstream in{std::string(text)};
    while (std::getline(in, item, ',')) {
        auto b = item.find_first_not_of(" \t");
        auto e = item.find_last_not_of(" \t");
        item = b == std::string::npos ? "" : item.substr(b, e - b + 1);
        if (auto idx = problem.processor_index(item)) {
            m.genes.push_back(*idx);
            continue;
        }
        std::size_t used = 0;
        unsigned long v = 0;
        try {
            v = std::stoul(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != item.size()) {
            throw Error("E_BAD_MAPPING", "'" + item + "' is neither a processor id nor an index");
        }
        m.genes.push_back(static_cast<ProcIndex>(v));
    }
    return m;
}

// Re-pins pinned genes in place.
inline void repin(const Problem& problem, Mapping& m) {
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (const auto& pin = problem.genes()[i].pinned) m[i] = *pin;
    }
}

// ---------------------------------------------------------------------------
// Mapping space
// ---------------------------------------------------------------------------

using BigInt = boost::multiprecision::cpp_int;

// |free processors| ^ |free tasks|.
inline BigInt mapping_space_size(const Problem& problem) {
    BigInt size = 1;
    const BigInt base = problem.free_processors().size();
    for (std::size_t i = 0; i < problem.free_task_count(); ++i) size *= base;
    return size;
}

inline Mapping random_mapping(const Problem& problem, Rng& rng) {
    Mapping m;
    m.genes.resize(problem.task_count());
    const auto free = problem.free_processors();
    for (std::size_t i = 0; i < m.size(); ++i) {
        const auto& pin = problem.genes()[i].pinned;
        m[i] = pin ? *pin : free[rng.below(free.size())];
    }
    return m;
}

}  // namespace mapdse
