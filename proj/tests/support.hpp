#pragma once

#include <numeric>
#include <string>
#include <vector>

#include "mapdse/mapdse.hpp"

namespace testing_support {

using namespace mapdse;

inline std::string source_path(const std::string& rel) { return std::string(MAPDSE_SOURCE_DIR) + "/" + rel; }

inline Platform homogeneous(std::size_t n, Cycles bus = 0) {
    Platform p;
    p.bus_word_cycles = bus;
    for (std::size_t k = 0; k < n; ++k) p.processors.push_back({"pe" + std::to_string(k), "cpu", false});
    return p;
}

inline Task task(std::string id, Cycles cost, std::string type = "cpu") {
    Task t;
    t.id = std::move(id);
    t.compute_cost[type] = cost;
    return t;
}

inline Channel channel(std::string id, std::string src, std::string dst, int tokens, Cycles local, Cycles shared,
                       int capacity = 0) {
    Channel c;
    c.id = std::move(id);
    c.src = std::move(src);
    c.dst = std::move(dst);
    c.tokens_per_firing = tokens;
    c.cost_local = local;
    c.cost_shared = shared;
    c.capacity = capacity ? capacity : tokens * 4;
    return c;
}

// a -> b, both with cost T on type cpu.
inline AppGraph pipeline2(Cycles t, int tokens, Cycles local, Cycles shared, int capacity = 0) {
    AppGraph app;
    app.name = "app";
    app.tasks = {task("a", t), task("b", t)};
    app.channels = {channel("c", "a", "b", tokens, local, shared, capacity)};
    return app;
}

inline Problem single(AppGraph app, Platform plat) {
    std::vector<AppGraph> apps;
    apps.push_back(std::move(app));
    return merge_apps(std::move(apps), std::move(plat));
}

struct RandomOptions {
    std::size_t max_tasks = 12;
    std::size_t max_procs = 4;
    bool acyclic = true;
    bool self_loops = false;
    bool multirate = false;
    bool pins = true;  // may add a reserved IO processor with pinned tasks
    std::size_t max_apps = 1;
};

// Random valid problem. Types are drawn from two tags, costs and
// communication rates from small ranges; cyclic graphs get initial tokens on
// back edges so they stay live.
inline Problem random_problem(Rng& rng, const RandomOptions& o = {}) {
    Platform plat;
    plat.bus_word_cycles = static_cast<Cycles>(rng.below(3));
    const std::size_t procs = 1 + rng.below(o.max_procs);
    for (std::size_t k = 0; k < procs; ++k) {
        plat.processors.push_back({"p" + std::to_string(k), rng.chance(0.5) ? "a" : "b", false});
    }
    const bool io = o.pins && rng.chance(0.4);
    if (io) plat.processors.push_back({"io", "io", true});

    std::vector<AppGraph> apps;
    const std::size_t napps = 1 + rng.below(o.max_apps);
    for (std::size_t a = 0; a < napps; ++a) {
        AppGraph app;
        app.name = "g" + std::to_string(a);
        const std::size_t n = 1 + rng.below(o.max_tasks / napps);
        std::vector<int> firings(n, 1);
        for (std::size_t i = 0; i < n; ++i) {
            Task t;
            t.id = "t" + std::to_string(i);
            if (o.multirate) firings[i] = 1 + static_cast<int>(rng.below(3));
            t.firings_per_frame = firings[i];
            if (io && rng.chance(0.2)) {
                t.pinned_to = "io";
                t.compute_cost["io"] = 1 + static_cast<Cycles>(rng.below(50));
            } else {
                t.compute_cost["a"] = 1 + static_cast<Cycles>(rng.below(100));
                t.compute_cost["b"] = 1 + static_cast<Cycles>(rng.below(100));
            }
            app.tasks.push_back(std::move(t));
        }
        const std::size_t edges = rng.below(2 * n + 1);
        for (std::size_t e = 0; e < edges; ++e) {
            std::size_t s = rng.below(n), d = rng.below(n);
            if (s == d && !o.self_loops) continue;
            const bool back = s > d || s == d;
            if (o.acyclic && back) {
                if (s == d) continue;
                std::swap(s, d);
            }
            Channel c;
            c.id = "c" + std::to_string(e);
            c.src = app.tasks[s].id;
            c.dst = app.tasks[d].id;
            // producer rate chosen so the per-frame volume divides evenly
            c.tokens_per_firing = firings[d] * (1 + static_cast<int>(rng.below(3)));
            const int consume = c.tokens_per_firing * firings[s] / firings[d];
            // one frame of tokens per channel keeps reconvergent multirate
            // paths live; per-channel sizing alone does not
            const int frame = c.tokens_per_firing * firings[s];
            const int live = c.tokens_per_firing + consume - std::gcd(c.tokens_per_firing, consume);
            c.capacity = std::max(frame, live) * (1 + static_cast<int>(rng.below(3)));
            c.token_size = static_cast<Cycles>(rng.below(4));
            c.cost_local = static_cast<Cycles>(rng.below(4));
            c.cost_shared = c.cost_local + static_cast<Cycles>(rng.below(10));
            if (!o.acyclic && back) {
                // a full frame of initial tokens keeps feedback loops live
                c.initial_tokens = frame;
                c.capacity += frame;
            }
            app.channels.push_back(std::move(c));
        }
        apps.push_back(std::move(app));
    }
    return merge_apps(std::move(apps), std::move(plat));
}

// Every valid mapping of a small problem, by odometer over all processor
// indices, filtered by validate_mapping.
inline std::vector<Mapping> all_valid_mappings(const Problem& p) {
    std::vector<Mapping> out;
    const std::size_t n = p.task_count(), k = p.processor_count();
    Mapping m{std::vector<ProcIndex>(n, 0)};
    while (true) {
        if (validate_mapping(p, m).empty()) out.push_back(m);
        std::size_t i = 0;
        while (i < n && m.genes[i] + 1 == k) m.genes[i++] = 0;
        if (i == n) break;
        ++m.genes[i];
    }
    return out;
}

}  // namespace testing_support
