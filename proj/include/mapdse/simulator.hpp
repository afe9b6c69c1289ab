#pragma once

#include <algorithm>
#include <deque>
#include <limits>
#include <ostream>
#include <queue>
#include <tuple>
#include <vector>

#include "metrics.hpp"
#include "model.hpp"

namespace mapdse {

struct SimConfig {
    int frames = 12;
    int warmup_frames = 2;
    std::uint64_t deadlock_horizon = 50'000'000;  // max events before giving up
    bool check_invariants = false;  // channel safety and throughput lower bound
};

struct EvalResult {
    double fet = 0.0;            // cycles per frame over the measured window
    Cycles window_cycles = 0;    // C(frames) - C(warmup_frames)
    int window_frames = 0;       // frames - warmup_frames
    Cycles tet = 0;              // completion time of the last frame
    double objective = 0.0;      // fet for one application, tet for several
    UsageVector usage;           // analytic, for logging
    std::uint64_t events = 0;
    bool deadlocked = false;
    std::vector<Cycles> frame_completion;  // index n: C(n), C(0) = 0
};

inline void check_sim_config(const SimConfig& cfg) {
    if (cfg.frames <= 0 || cfg.warmup_frames < 0 || cfg.frames <= cfg.warmup_frames) {
        throw Error("E_BAD_SIM_CONFIG", "need frames > warmup_frames >= 0");
    }
}

// Per-frame compute-only load of the busiest processor; no schedule can
// sustain a frame period below this.
inline Cycles compute_lower_bound(const Problem& problem, const Mapping& m) {
    std::vector<Cycles> load(problem.processor_count(), 0);
    for (std::size_t i = 0; i < m.size(); ++i) {
        load[m[i]] += problem.genes()[i].cost[m[i]] * problem.genes()[i].firings;
    }
    return load.empty() ? 0 : *std::max_element(load.begin(), load.end());
}

namespace detail {

// Event-driven execution of a mapped problem. Every process fires
// repeatedly: it takes its input tokens and reserves output space when the
// firing starts, spends read, compute and write time on its processor, and
// hands cross-processor tokens to the shared bus. A firing holds its
// processor from start to finish, including any wait for the bus.
class Simulation {
public:
    Simulation(const Problem& problem, const Mapping& mapping, const SimConfig& cfg, std::ostream* trace)
        : problem_(problem), mapping_(mapping), cfg_(cfg), trace_(trace) {
        const auto& genes = problem.genes();
        const auto& links = problem.links();
        tasks_.resize(genes.size());
        procs_.resize(problem.processor_count());
        fifo_.resize(links.size());
        for (std::size_t li = 0; li < links.size(); ++li) fifo_[li].tokens = links[li].initial_tokens;

        for (std::size_t i = 0; i < genes.size(); ++i) {
            TaskState& ts = tasks_[i];
            ts.proc = mapping[i];
            ts.total_firings = static_cast<std::int64_t>(cfg.frames) * genes[i].firings;
            build_steps(i);
        }
        // Round-robin order on each processor is declaration order.
        std::vector<std::size_t> by_decl(genes.size());
        for (std::size_t i = 0; i < by_decl.size(); ++i) by_decl[i] = i;
        std::sort(by_decl.begin(), by_decl.end(),
                  [&](std::size_t a, std::size_t b) { return genes[a].decl < genes[b].decl; });
        for (std::size_t i : by_decl) procs_[tasks_[i].proc].tasks.push_back(i);
        completion_.assign(static_cast<std::size_t>(cfg.frames) + 1, 0);
    }

    EvalResult run() {
        if (trace_) *trace_ << "time,processor,task,phase,channel\n";
        dispatch(0);
        EvalResult r;
        while (!events_.empty()) {
            const Cycles now = events_.top().time;
            while (!events_.empty() && events_.top().time == now) {
                Event e = events_.top();
                events_.pop();
                ++r.events;
                if (e.kind == EventKind::bus_done) {
                    bus_busy_ = false;
                    advance(e.gene, now);
                    grant_bus(now);
                } else {
                    advance(e.gene, now);
                }
            }
            dispatch(now);
            if (r.events > cfg_.deadlock_horizon) break;
        }

        r.deadlocked = std::any_of(tasks_.begin(), tasks_.end(),
                                   [](const TaskState& t) { return t.firings_done < t.total_firings; });
        r.frame_completion = completion_;
        r.window_frames = cfg_.frames - cfg_.warmup_frames;
        if (r.deadlocked) {
            r.fet = std::numeric_limits<double>::infinity();
            r.objective = r.fet;
            r.tet = std::numeric_limits<Cycles>::max();
            return r;
        }
        r.tet = completion_.back();
        r.window_cycles = completion_.back() - completion_[static_cast<std::size_t>(cfg_.warmup_frames)];
        r.fet = static_cast<double>(r.window_cycles) / r.window_frames;
        r.objective = problem_.multi_app() ? static_cast<double>(r.tet) : r.fet;
        if (cfg_.check_invariants) {
            // All work of frames 1..n is done by C(n). The windowed rate has
            // no such guarantee: processors may run ahead before C(warmup).
            const Cycles bound = compute_lower_bound(problem_, mapping_);
            for (std::size_t n = 1; n < completion_.size(); ++n) {
                if (completion_[n] < bound * static_cast<Cycles>(n)) {
                    throw Error("E_INVARIANT", "frame " + std::to_string(n) + " completed below the compute lower bound");
                }
            }
            if (static_cast<double>(r.tet) < r.fet) throw Error("E_INVARIANT", "tet below fet");
        }
        return r;
    }

private:
    enum class StepKind { busy, bus, deliver };
    enum class EventKind { step_done, bus_done };

    static constexpr std::size_t no_link = static_cast<std::size_t>(-1);

    struct Step {
        StepKind kind;
        Cycles duration = 0;
        std::size_t link = 0;
        int tokens = 0;
        const char* phase = "";
    };

    struct TaskState {
        ProcIndex proc = 0;
        std::vector<Step> steps;
        std::size_t pc = 0;
        bool firing = false;
        std::int64_t firings_done = 0;
        std::int64_t total_firings = 0;
    };

    struct ProcState {
        std::vector<std::size_t> tasks;  // genes, declaration order
        std::size_t last = static_cast<std::size_t>(-1);  // position last served
        bool busy = false;
    };

    struct Fifo {
        std::int64_t tokens = 0;
        std::int64_t reserved = 0;  // space claimed by firings in progress
    };

    struct Event {
        Cycles time;
        ProcIndex proc;
        std::size_t decl;
        std::uint64_t seq;
        std::size_t gene;
        EventKind kind;
        bool operator>(const Event& o) const {
            return std::tie(time, proc, decl, seq) > std::tie(o.time, o.proc, o.decl, o.seq);
        }
    };

    void build_steps(std::size_t gene) {
        const Gene& g = problem_.genes()[gene];
        const ProcIndex k = mapping_[gene];
        auto& steps = tasks_[gene].steps;
        for (const Incidence& inc : problem_.incident(gene)) {
            if (inc.outgoing) continue;
            const Link& l = problem_.links()[inc.link];
            const bool local = mapping_[l.src] == k;
            steps.push_back({StepKind::busy, l.consume * l.cost_per_token(local), inc.link, 0, "read"});
        }
        steps.push_back({StepKind::busy, g.cost[k], no_link, 0, "compute"});
        for (const Incidence& inc : problem_.incident(gene)) {
            if (!inc.outgoing) continue;
            const Link& l = problem_.links()[inc.link];
            const bool local = mapping_[l.dst] == k;
            steps.push_back({StepKind::busy, l.produce * l.cost_per_token(local), inc.link, 0, "write"});
            const Cycles bus = l.produce * l.token_size * problem_.platform().bus_word_cycles;
            if (!local && bus > 0) steps.push_back({StepKind::bus, bus, inc.link, 0, "bus"});
            steps.push_back({StepKind::deliver, 0, inc.link, l.produce, "deliver"});
        }
    }

    void emit(Cycles t, std::size_t gene, const char* phase, const std::size_t* link) {
        if (!trace_) return;
        *trace_ << t << ',' << problem_.platform().processors[tasks_[gene].proc].id << ','
                << problem_.genes()[gene].qualified_id << ',' << phase << ','
                << (link ? problem_.links()[*link].id : std::string("-")) << '\n';
    }

    void schedule(Cycles t, std::size_t gene, EventKind kind) {
        events_.push({t, tasks_[gene].proc, problem_.genes()[gene].decl, seq_++, gene, kind});
    }

    void check_fifo(std::size_t li) const {
        if (!cfg_.check_invariants) return;
        const Fifo& f = fifo_[li];
        if (f.tokens < 0 || f.tokens + f.reserved > problem_.links()[li].capacity) {
            throw Error("E_INVARIANT", "channel " + problem_.links()[li].id + " out of bounds");
        }
    }

    bool ready(std::size_t gene) const {
        const TaskState& ts = tasks_[gene];
        if (ts.firing || ts.firings_done >= ts.total_firings) return false;
        for (const Incidence& inc : problem_.incident(gene)) {
            const Link& l = problem_.links()[inc.link];
            const Fifo& f = fifo_[inc.link];
            if (!inc.outgoing) {
                if (f.tokens < l.consume) return false;
            } else {
                const std::int64_t taken = l.src == l.dst ? l.consume : 0;
                if (f.tokens - taken + f.reserved + l.produce > l.capacity) return false;
            }
        }
        return true;
    }

    // Round-robin among ready processes, preferring the oldest pending frame.
    std::optional<std::size_t> pick(ProcState& ps) const {
        const std::size_t n = ps.tasks.size();
        std::optional<std::size_t> best_pos;
        std::int64_t best_frame = 0;
        for (std::size_t step = 1; step <= n; ++step) {
            const std::size_t pos = (ps.last + step) % n;
            const std::size_t gene = ps.tasks[pos];
            if (!ready(gene)) continue;
            const std::int64_t frame = tasks_[gene].firings_done / problem_.genes()[gene].firings;
            if (!best_pos || frame < best_frame) {
                best_pos = pos;
                best_frame = frame;
            }
        }
        if (!best_pos) return std::nullopt;
        ps.last = *best_pos;
        return ps.tasks[*best_pos];
    }

    void dispatch(Cycles t) {
        bool progress = true;
        while (progress) {
            progress = false;
            for (auto& ps : procs_) {
                if (ps.busy || ps.tasks.empty()) continue;
                if (auto gene = pick(ps)) {
                    start(*gene, t);
                    progress = true;
                }
            }
        }
    }

    void start(std::size_t gene, Cycles t) {
        TaskState& ts = tasks_[gene];
        ts.firing = true;
        ts.pc = 0;
        procs_[ts.proc].busy = true;
        emit(t, gene, "start", nullptr);
        for (const Incidence& inc : problem_.incident(gene)) {
            const Link& l = problem_.links()[inc.link];
            if (inc.outgoing) {
                fifo_[inc.link].reserved += l.produce;
            } else {
                fifo_[inc.link].tokens -= l.consume;
            }
        }
        for (const Incidence& inc : problem_.incident(gene)) check_fifo(inc.link);
        advance(gene, t);
    }

    // Runs the current firing forward from its program counter until it has
    // to wait for time to pass or for the bus.
    void advance(std::size_t gene, Cycles t) {
        TaskState& ts = tasks_[gene];
        while (ts.pc < ts.steps.size()) {
            const Step& s = ts.steps[ts.pc];
            switch (s.kind) {
                case StepKind::busy:
                    ++ts.pc;
                    if (s.duration > 0) {
                        emit(t, gene, s.phase, s.link == no_link ? nullptr : &s.link);
                        schedule(t + s.duration, gene, EventKind::step_done);
                        return;
                    }
                    break;
                case StepKind::deliver:
                    fifo_[s.link].tokens += s.tokens;
                    fifo_[s.link].reserved -= s.tokens;
                    check_fifo(s.link);
                    emit(t, gene, "deliver", &s.link);
                    ++ts.pc;
                    break;
                case StepKind::bus:
                    emit(t, gene, "bus_request", &s.link);
                    if (bus_busy_ || !bus_queue_.empty()) {
                        bus_queue_.push_back(gene);
                        return;
                    }
                    ++ts.pc;
                    bus_busy_ = true;
                    emit(t, gene, "bus_grant", &s.link);
                    schedule(t + s.duration, gene, EventKind::bus_done);
                    return;
            }
        }
        finish(gene, t);
    }

    void grant_bus(Cycles t) {
        if (bus_busy_ || bus_queue_.empty()) return;
        const std::size_t gene = bus_queue_.front();
        bus_queue_.pop_front();
        TaskState& ts = tasks_[gene];
        const Step& s = ts.steps[ts.pc++];
        bus_busy_ = true;
        emit(t, gene, "bus_grant", &s.link);
        schedule(t + s.duration, gene, EventKind::bus_done);
    }

    void finish(std::size_t gene, Cycles t) {
        TaskState& ts = tasks_[gene];
        ts.firing = false;
        ++ts.firings_done;
        procs_[ts.proc].busy = false;
        emit(t, gene, "end", nullptr);
        const int f = problem_.genes()[gene].firings;
        if (ts.firings_done % f == 0) {
            auto& c = completion_[static_cast<std::size_t>(ts.firings_done / f)];
            c = std::max(c, t);
        }
    }

    const Problem& problem_;
    const Mapping& mapping_;
    const SimConfig& cfg_;
    std::ostream* trace_;

    std::vector<TaskState> tasks_;
    std::vector<ProcState> procs_;
    std::vector<Fifo> fifo_;
    std::priority_queue<Event, std::vector<Event>, std::greater<>> events_;
    std::uint64_t seq_ = 0;
    bool bus_busy_ = false;
    std::deque<std::size_t> bus_queue_;
    std::vector<Cycles> completion_;
};

}  // namespace detail

// Simulates `cfg.frames` iterations of every application under `mapping`.
// A deadlock is reported through EvalResult::deadlocked (objective = +inf)
// rather than thrown, so searches can carry on.
inline EvalResult simulate(const Problem& problem, const Mapping& mapping, const SimConfig& cfg = {},
                           std::ostream* trace = nullptr) {
    check_sim_config(cfg);
    if (auto diags = validate_mapping(problem, mapping); has_errors(diags)) {
        throw Error(diags.front().code, diags.front().message);
    }
    detail::Simulation sim(problem, mapping, cfg, trace);
    EvalResult r = sim.run();
    r.usage = pusage(problem, mapping);
    return r;
}

// One-iteration token game over the whole problem with the declared
// capacities and initial tokens. If greedy firing cannot complete a frame,
// the graph may deadlock under blocking reads and writes.
inline std::vector<Diagnostic> check_deadlock_free(const Problem& problem) {
    const auto& genes = problem.genes();
    const auto& links = problem.links();
    std::vector<std::int64_t> tokens(links.size());
    for (std::size_t li = 0; li < links.size(); ++li) tokens[li] = links[li].initial_tokens;
    std::vector<int> fired(genes.size(), 0);

    auto can_fire = [&](std::size_t i) {
        if (fired[i] >= genes[i].firings) return false;
        for (const Incidence& inc : problem.incident(i)) {
            const Link& l = links[inc.link];
            if (!inc.outgoing) {
                if (tokens[inc.link] < l.consume) return false;
            } else {
                const std::int64_t taken = l.src == l.dst ? l.consume : 0;
                if (tokens[inc.link] - taken + l.produce > l.capacity) return false;
            }
        }
        return true;
    };

    bool progress = true;
    while (progress) {
        progress = false;
        for (std::size_t i = 0; i < genes.size(); ++i) {
            while (can_fire(i)) {
                for (const Incidence& inc : problem.incident(i)) {
                    const Link& l = links[inc.link];
                    if (!inc.outgoing) tokens[inc.link] -= l.consume;
                }
                for (const Incidence& inc : problem.incident(i)) {
                    const Link& l = links[inc.link];
                    if (inc.outgoing) tokens[inc.link] += l.produce;
                }
                ++fired[i];
                progress = true;
            }
        }
    }

    std::vector<Diagnostic> out;
    for (std::size_t i = 0; i < genes.size(); ++i) {
        if (fired[i] < genes[i].firings) {
            out.push_back({Severity::warning, "W_POSSIBLE_DEADLOCK",
                           genes[i].qualified_id + " cannot complete one frame; check cycle initial tokens and capacities"});
        }
    }
    return out;
}

}  // namespace mapdse
