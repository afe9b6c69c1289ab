#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "model.hpp"

// Problem files (format 1):
//
//   {
//     "format": 1,
//     "platform": {
//       "bus_word_cycles": 1, "arbitration": "fcfs",
//       "processors": [ {"id": "pe0", "type": "risc", "reserved": false}, ... ]
//     },
//     "apps": [ {
//       "name": "mp3",
//       "tasks": [ {"id": "src", "compute_cost": {"risc": 100},
//                   "firings_per_frame": 1, "pinned_to": "io0"}, ... ],
//       "channels": [ {"id": "c0", "src": "src", "dst": "dec",
//                      "tokens_per_firing": 1, "token_size": 4, "capacity": 4,
//                      "cost_local": 2, "cost_shared": 10, "initial_tokens": 0}, ... ]
//     } ]
//   }
//
// Optional fields take the defaults shown in model.hpp.

namespace mapdse {

using json = nlohmann::ordered_json;

namespace detail {

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
    auto it = j.find(key);
    return it == j.end() ? fallback : it->template get<T>();
}

inline const json& require(const json& j, const char* key, const std::string& where) {
    auto it = j.find(key);
    if (it == j.end()) throw Error("E_FORMAT", where + ": missing key '" + key + "'");
    return *it;
}

}  // namespace detail

inline json to_json(const Platform& plat) {
    json procs = json::array();
    for (const auto& p : plat.processors) {
        json jp = {{"id", p.id}, {"type", p.type}};
        if (p.reserved) jp["reserved"] = true;
        procs.push_back(std::move(jp));
    }
    return {{"bus_word_cycles", plat.bus_word_cycles},
            {"arbitration", plat.arbitration},
            {"processors", std::move(procs)}};
}

inline json to_json(const AppGraph& app) {
    json tasks = json::array();
    for (const auto& t : app.tasks) {
        json jt = {{"id", t.id}, {"compute_cost", json::object()}, {"firings_per_frame", t.firings_per_frame}};
        for (const auto& [type, c] : t.compute_cost) jt["compute_cost"][type] = c;
        if (t.pinned_to) jt["pinned_to"] = *t.pinned_to;
        tasks.push_back(std::move(jt));
    }
    json channels = json::array();
    for (const auto& c : app.channels) {
        json jc = {{"id", c.id},
                   {"src", c.src},
                   {"dst", c.dst},
                   {"tokens_per_firing", c.tokens_per_firing},
                   {"token_size", c.token_size},
                   {"capacity", c.capacity},
                   {"cost_local", c.cost_local},
                   {"cost_shared", c.cost_shared}};
        if (c.initial_tokens != 0) jc["initial_tokens"] = c.initial_tokens;
        channels.push_back(std::move(jc));
    }
    return {{"name", app.name}, {"tasks", std::move(tasks)}, {"channels", std::move(channels)}};
}

inline json problem_to_json(const std::vector<AppGraph>& apps, const Platform& plat) {
    json j = {{"format", 1}, {"platform", to_json(plat)}, {"apps", json::array()}};
    for (const auto& a : apps) j["apps"].push_back(to_json(a));
    return j;
}

inline json problem_to_json(const Problem& p) { return problem_to_json(p.apps(), p.platform()); }

inline Platform platform_from_json(const json& j) {
    Platform plat;
    plat.bus_word_cycles = detail::get_or<Cycles>(j, "bus_word_cycles", 0);
    plat.arbitration = detail::get_or<std::string>(j, "arbitration", "fcfs");
    for (const auto& jp : detail::require(j, "processors", "platform")) {
        Processor p;
        p.id = detail::require(jp, "id", "processor").get<std::string>();
        p.type = detail::require(jp, "type", "processor '" + p.id + "'").get<std::string>();
        p.reserved = detail::get_or<bool>(jp, "reserved", false);
        plat.processors.push_back(std::move(p));
    }
    return plat;
}

inline AppGraph app_from_json(const json& j) {
    AppGraph app;
    app.name = detail::require(j, "name", "app").get<std::string>();
    const std::string where = "app '" + app.name + "'";
    for (const auto& jt : detail::require(j, "tasks", where)) {
        Task t;
        t.id = detail::require(jt, "id", where + " task").get<std::string>();
        for (const auto& [type, c] : detail::require(jt, "compute_cost", where + " task '" + t.id + "'").items()) {
            t.compute_cost[type] = c.get<Cycles>();
        }
        t.firings_per_frame = detail::get_or<int>(jt, "firings_per_frame", 1);
        if (auto it = jt.find("pinned_to"); it != jt.end() && !it->is_null()) {
            t.pinned_to = it->get<std::string>();
        }
        app.tasks.push_back(std::move(t));
    }
    if (auto it = j.find("channels"); it != j.end()) {
        for (const auto& jc : *it) {
            Channel c;
            c.id = detail::require(jc, "id", where + " channel").get<std::string>();
            const std::string cw = where + " channel '" + c.id + "'";
            c.src = detail::require(jc, "src", cw).get<std::string>();
            c.dst = detail::require(jc, "dst", cw).get<std::string>();
            c.tokens_per_firing = detail::get_or<int>(jc, "tokens_per_firing", 1);
            c.token_size = detail::get_or<Cycles>(jc, "token_size", 1);
            c.capacity = detail::get_or<int>(jc, "capacity", 1);
            c.cost_local = detail::get_or<Cycles>(jc, "cost_local", 0);
            c.cost_shared = detail::get_or<Cycles>(jc, "cost_shared", 0);
            c.initial_tokens = detail::get_or<int>(jc, "initial_tokens", 0);
            app.channels.push_back(std::move(c));
        }
    }
    return app;
}

// Throws Error("E_FORMAT", ...) on schema problems; semantic checks are left
// to validate_problem.
inline Problem problem_from_json(const json& j) {
    try {
        if (!j.is_object()) throw Error("E_FORMAT", "problem must be a JSON object");
        auto fmt = j.find("format");
        if (fmt == j.end() || !fmt->is_number_integer() || fmt->get<int>() != 1) {
            throw Error("E_FORMAT", "problem file requires \"format\": 1");
        }
        Platform plat = platform_from_json(detail::require(j, "platform", "problem"));
        std::vector<AppGraph> apps;
        for (const auto& ja : detail::require(j, "apps", "problem")) apps.push_back(app_from_json(ja));
        return merge_apps(std::move(apps), std::move(plat));
    } catch (const json::exception& e) {
        throw Error("E_FORMAT", e.what());
    }
}

inline json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("E_IO", "cannot open '" + path.string() + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw Error("E_FORMAT", path.string() + ": " + e.what());
    }
}

inline Problem load_problem(const std::filesystem::path& path) {
    return problem_from_json(read_json_file(path));
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("E_IO", "cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw Error("E_IO", "failed writing '" + path.string() + "'");
}

}  // namespace mapdse
