#pragma once

#include <charconv>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "core.hpp"
#include "model.hpp"
#include "problem_io.hpp"

namespace mapdse {

// Shape of a synthetic streaming application and its platform.
struct BenchmarkShape {
    std::string name = "app";
    std::size_t tasks = 8;
    std::size_t pe = 3;      // processors open to every task
    std::size_t types = 2;   // processor types among the open processors
    std::size_t io = 0;      // reserved IO processors
    std::size_t pinned = 0;  // 1: source on io0, 2: source and sink
    double fork = 0.3;       // chance that a task gets a second input
    Cycles cost_min = 500;
    Cycles cost_max = 5000;
    int tokens_min = 8;
    int tokens_max = 64;
    Cycles token_size_max = 4;
    Cycles cost_local_max = 2;
    Cycles cost_shared_min = 4;
    Cycles cost_shared_max = 12;
    Cycles bus_word_cycles = 1;
    std::uint64_t seed = 1;
};

// Bundled presets. mp3like, mjpeg8 and sobel6 share one platform
// (5 processors + 1 IO processor) so they can be merged.
inline BenchmarkShape benchmark_preset(const std::string& name) {
    BenchmarkShape s;
    s.name = name;
    if (name == "mp3like") {
        s.tasks = 27, s.pe = 5, s.io = 1, s.pinned = 2, s.seed = 2701;
    } else if (name == "mjpeg8") {
        s.tasks = 8, s.pe = 5, s.io = 1, s.pinned = 2, s.seed = 801;
    } else if (name == "sobel6") {
        s.tasks = 6, s.pe = 5, s.io = 1, s.pinned = 2, s.seed = 601, s.fork = 0.5;
    } else if (name == "tiny8x3") {
        s.tasks = 8, s.pe = 3, s.io = 0, s.pinned = 0, s.seed = 83;
    } else {
        throw Error("E_BAD_SHAPE", "unknown benchmark preset '" + name + "'");
    }
    return s;
}

inline bool is_benchmark_preset(const std::string& name) {
    return name == "mp3like" || name == "mjpeg8" || name == "sobel6" || name == "tiny8x3";
}

inline void check_shape(const BenchmarkShape& s) {
    auto bad = [](const std::string& msg) { throw Error("E_BAD_SHAPE", msg); };
    if (s.name.empty()) bad("name must not be empty");
    if (s.tasks < 1) bad("tasks must be >= 1");
    if (s.pe < 1) bad("pe must be >= 1");
    if (s.types < 1 || s.types > s.pe) bad("types must be in [1, pe]");
    if (s.pinned > 2 || s.pinned > s.tasks) bad("pinned must be 0, 1 or 2 and at most tasks");
    if (s.pinned > 0 && s.io == 0) bad("pinned tasks need an io processor");
    if (s.pinned == 2 && s.tasks < 2) bad("pinning source and sink needs two tasks");
    if (s.fork < 0.0 || s.fork > 1.0) bad("fork must be in [0, 1]");
    if (s.cost_min < 1 || s.cost_max < s.cost_min) bad("need 1 <= cost_min <= cost_max");
    if (s.tokens_min < 1 || s.tokens_max < s.tokens_min) bad("need 1 <= tokens_min <= tokens_max");
    if (s.token_size_max < 1) bad("token_size_max must be >= 1");
    if (s.cost_local_max < 0 || s.cost_shared_min < 0 || s.cost_shared_max < s.cost_shared_min) {
        bad("bad communication cost range");
    }
    if (s.bus_word_cycles < 0) bad("bus_word_cycles must be >= 0");
}

inline Platform benchmark_platform(const BenchmarkShape& s) {
    Platform plat;
    plat.bus_word_cycles = s.bus_word_cycles;
    for (std::size_t k = 0; k < s.pe; ++k) {
        plat.processors.push_back({"pe" + std::to_string(k), "t" + std::to_string(k % s.types), false});
    }
    for (std::size_t k = 0; k < s.io; ++k) plat.processors.push_back({"io" + std::to_string(k), "io", true});
    return plat;
}

// Acyclic stream graph: task 0 is the source, the last task the sink. Each
// other task reads from one of the few tasks just before it and, with
// probability `fork`, from one more earlier task; tasks left without a
// reader feed a later task.
inline AppGraph benchmark_app(const BenchmarkShape& s) {
    check_shape(s);
    Rng rng(s.seed);
    AppGraph app;
    app.name = s.name;
    const std::size_t n = s.tasks;
    auto pick = [&](Cycles lo, Cycles hi) { return lo + static_cast<Cycles>(rng.below(static_cast<std::uint64_t>(hi - lo + 1))); };

    for (std::size_t i = 0; i < n; ++i) {
        Task t;
        t.id = "t" + std::to_string(i);
        const bool pin = (i == 0 && s.pinned >= 1) || (i == n - 1 && s.pinned == 2 && n > 1);
        const Cycles base = pick(s.cost_min, s.cost_max);
        if (pin) {
            t.pinned_to = "io0";
            t.compute_cost["io"] = base;
        } else {
            for (std::size_t ty = 0; ty < s.types; ++ty) {
                // per-type speed factor in [0.5, 2.0]
                const double f = 0.5 + 1.5 * rng.uniform();
                t.compute_cost["t" + std::to_string(ty)] = std::max<Cycles>(1, static_cast<Cycles>(static_cast<double>(base) * f));
            }
        }
        app.tasks.push_back(std::move(t));
    }

    std::vector<std::vector<bool>> edge(n, std::vector<bool>(n, false));
    std::vector<bool> has_out(n, false);
    auto add = [&](std::size_t a, std::size_t b) {
        if (edge[a][b]) return;
        edge[a][b] = true;
        has_out[a] = true;
        Channel c;
        c.id = "c" + std::to_string(app.channels.size());
        c.src = app.tasks[a].id;
        c.dst = app.tasks[b].id;
        c.tokens_per_firing = static_cast<int>(pick(s.tokens_min, s.tokens_max));
        c.token_size = pick(1, s.token_size_max);
        c.capacity = c.tokens_per_firing * static_cast<int>(pick(2, 4));
        c.cost_local = pick(0, s.cost_local_max);
        c.cost_shared = std::max(c.cost_local, pick(s.cost_shared_min, s.cost_shared_max));
        app.channels.push_back(std::move(c));
    };
    constexpr std::size_t window = 3;
    for (std::size_t i = 1; i < n; ++i) {
        const std::size_t lo = i > window ? i - window : 0;
        add(lo + static_cast<std::size_t>(rng.below(i - lo)), i);
        if (i >= 2 && rng.chance(s.fork)) add(static_cast<std::size_t>(rng.below(i)), i);
    }
    for (std::size_t i = 0; i + 1 < n; ++i) {
        if (!has_out[i]) add(i, i + 1 + static_cast<std::size_t>(rng.below(n - 1 - i)));
    }
    return app;
}

namespace detail {

inline std::size_t parse_count(std::string_view key, std::string_view v) {
    std::size_t out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || p != v.data() + v.size()) {
        throw Error("E_BAD_SHAPE", "bad value for '" + std::string(key) + "': " + std::string(v));
    }
    return out;
}

inline double parse_real(std::string_view key, std::string_view v) {
    double out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || p != v.data() + v.size()) {
        throw Error("E_BAD_SHAPE", "bad value for '" + std::string(key) + "': " + std::string(v));
    }
    return out;
}

}  // namespace detail

// "preset" or "key=value,key=value" (keys as in BenchmarkShape), or
// "preset,key=value" to adjust a preset.
inline BenchmarkShape parse_shape(std::string_view text) {
    BenchmarkShape s;
    bool first = true;
    while (!text.empty()) {
        const auto comma = text.find(',');
        const std::string_view item = text.substr(0, comma);
        text = comma == std::string_view::npos ? std::string_view{} : text.substr(comma + 1);
        const auto eq = item.find('=');
        if (eq == std::string_view::npos) {
            if (!first) throw Error("E_BAD_SHAPE", "expected key=value, got '" + std::string(item) + "'");
            s = benchmark_preset(std::string(item));
            first = false;
            continue;
        }
        first = false;
        const std::string_view key = item.substr(0, eq), v = item.substr(eq + 1);
        auto count = [&] { return detail::parse_count(key, v); };
        if (key == "name") s.name = std::string(v);
        else if (key == "tasks") s.tasks = count();
        else if (key == "pe") s.pe = count();
        else if (key == "types") s.types = count();
        else if (key == "io") s.io = count();
        else if (key == "pinned") s.pinned = count();
        else if (key == "fork") s.fork = detail::parse_real(key, v);
        else if (key == "cost_min") s.cost_min = static_cast<Cycles>(count());
        else if (key == "cost_max") s.cost_max = static_cast<Cycles>(count());
        else if (key == "tokens_min") s.tokens_min = static_cast<int>(count());
        else if (key == "tokens_max") s.tokens_max = static_cast<int>(count());
        else if (key == "token_size_max") s.token_size_max = static_cast<Cycles>(count());
        else if (key == "cost_local_max") s.cost_local_max = static_cast<Cycles>(count());
        else if (key == "cost_shared_min") s.cost_shared_min = static_cast<Cycles>(count());
        else if (key == "cost_shared_max") s.cost_shared_max = static_cast<Cycles>(count());
        else if (key == "bus_word_cycles") s.bus_word_cycles = static_cast<Cycles>(count());
        else if (key == "seed") s.seed = count();
        else throw Error("E_BAD_SHAPE", "unknown shape key '" + std::string(key) + "'");
    }
    check_shape(s);
    return s;
}

// Problem file for one shape, or for several joined by '+', which must share
// a platform. A seed override replaces each part's seed with seed + index.
inline json gen_benchmark(std::string_view spec, std::optional<std::uint64_t> seed = std::nullopt) {
    std::vector<AppGraph> apps;
    std::optional<Platform> plat;
    std::size_t part = 0;
    while (true) {
        const auto plus = spec.find('+');
        BenchmarkShape s = parse_shape(spec.substr(0, plus));
        if (seed) s.seed = *seed + part;
        Platform p = benchmark_platform(s);
        if (!plat) {
            plat = p;
        } else if (to_json(*plat) != to_json(p)) {
            throw Error("E_BAD_SHAPE", "merged benchmarks must share one platform");
        }
        apps.push_back(benchmark_app(s));
        ++part;
        if (plus == std::string_view::npos) break;
        spec = spec.substr(plus + 1);
    }
    return problem_to_json(apps, *plat);
}

inline std::string gen_benchmark_text(std::string_view spec, std::optional<std::uint64_t> seed = std::nullopt) {
    return gen_benchmark(spec, seed).dump(2) + "\n";
}

}  // namespace mapdse
