#pragma once

// Parallel replica engines for metastable jump processes: the continuous-time
// variant (stages measured on the CTMC clock) and the embedded-chain variant
// (stages measured in jumps, holding times carried along as weights).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "parrep/dephase.hpp"
#include "parrep/dynamics.hpp"
#include "parrep/rng.hpp"
#include "parrep/ssa.hpp"
#include "parrep/workers.hpp"

namespace parrep {

/// Identifies a metastable set: the values of the slow observables.
using Label = std::vector<double>;

/// Maps a state to the metastable set containing it, if any.
template <class State>
class MetastableLabeler {
  public:
    using LabelFn = std::function<std::optional<Label>(const State&)>;
    using ContainsFn = std::function<bool(const Label&, const State&)>;

    explicit MetastableLabeler(LabelFn label) : label_(std::move(label)) {}
    MetastableLabeler(LabelFn label, ContainsFn contains)
        : label_(std::move(label)), contains_(std::move(contains)) {}

    std::optional<Label> label(const State& x) const { return label_(x); }

    bool contains(const Label& w, const State& x) const {
        if (contains_) return contains_(w, x);
        const auto l = label_(x);
        return l && *l == w;
    }

    Membership<State> membership(Label w) const {
        return [this, w = std::move(w)](const State& x) { return contains(w, x); };
    }

  private:
    LabelFn label_;
    ContainsFn contains_;
};

/// W_{m,n,...} = level sets of the slow observables; every state is labeled.
inline MetastableLabeler<PopulationState> slow_observable_labeler(std::vector<ObservableSpec> slow) {
    auto label = [slow](const PopulationState& x) -> std::optional<Label> {
        Label l(slow.size());
        for (std::size_t i = 0; i < slow.size(); ++i) l[i] = evaluate(slow[i], x);
        return l;
    };
    auto contains = [slow](const Label& w, const PopulationState& x) {
        for (std::size_t i = 0; i < slow.size(); ++i)
            if (evaluate(slow[i], x) != w[i]) return false;
        return true;
    };
    return {std::move(label), std::move(contains)};
}

/// Explicit-chain labeler: set k of `sets` gets label {k}; other states are unlabeled.
inline MetastableLabeler<Eigen::Index> state_set_labeler(std::vector<std::vector<Eigen::Index>> sets) {
    return MetastableLabeler<Eigen::Index>([sets = std::move(sets)](const Eigen::Index& x) -> std::optional<Label> {
        for (std::size_t k = 0; k < sets.size(); ++k)
            if (std::find(sets[k].begin(), sets[k].end(), x) != sets[k].end())
                return Label{static_cast<double>(k)};
        return std::nullopt;
    });
}

// ---------------------------------------------------------------------------

/// Sums carried by every stage: user observables, then the total-rate
/// integral (a serial-equivalent event count) and the integral of 1.
struct StageSums {
    std::vector<double> observables;
    double rate_integral = 0;
    double unit_integral = 0;

    explicit StageSums(std::size_t n = 0) : observables(n, 0.0) {}

    StageSums& operator+=(const StageSums& o) {
        for (std::size_t k = 0; k < observables.size(); ++k) observables[k] += o.observables[k];
        rate_integral += o.rate_integral;
        unit_integral += o.unit_integral;
        return *this;
    }
};

namespace detail {

template <class State>
void accumulate(StageSums& s, std::span<const Observable<State>> obs, const State& x, double q, double dt) {
    for (std::size_t k = 0; k < obs.size(); ++k) s.observables[k] += obs[k](x) * dt;
    s.rate_integral += q * dt;
    s.unit_integral += dt;
}

}  // namespace detail

template <class State>
struct DecorrelationResult {
    std::optional<Label> label;  // set dwelt in; empty when the horizon cut the stage
    State state;
    bool horizon_reached = false;
    double time = 0;             // simulated time spent in the stage
    std::uint64_t steps = 0;     // jumps fired
    StageSums sums;
};

/// Serial evolution until the path has stayed in one labeled set for time
/// t_c, or until `time_budget` runs out. The holding interval crossing the
/// dwell deadline is cut there; the memoryless clock makes this exact.
template <JumpDynamics D>
DecorrelationResult<typename D::State> decorrelation_stage_ctmc(
    const D& dyn, const MetastableLabeler<typename D::State>& labeler, double t_c, typename D::State x,
    std::span<const Observable<typename D::State>> obs, double time_budget, RngStream& rng) {
    if (!(t_c >= 0)) throw InputError("t_c must be non-negative");
    DecorrelationResult<typename D::State> out{labeler.label(x), std::move(x), false, 0, 0, StageSums(obs.size())};
    auto& s = out.state;
    double dwell_start = 0;
    while (true) {
        if (out.label && out.time - dwell_start >= t_c) return out;
        const double q = dyn.total_rate(s);
        const double dt = rng.exponential(q);
        const double deadline = out.label ? dwell_start + t_c : std::numeric_limits<double>::infinity();
        const double stop = std::min(deadline, time_budget);
        if (out.time + dt >= stop) {
            detail::accumulate(out.sums, obs, s, q, stop - out.time);
            out.time = stop;
            out.horizon_reached = stop == time_budget && time_budget < deadline;
            if (out.horizon_reached) out.label.reset();
            return out;
        }
        detail::accumulate(out.sums, obs, s, q, dt);
        out.time += dt;
        dyn.fire(s, rng.uniform() * q);
        ++out.steps;
        auto next = labeler.label(s);
        if (next != out.label) {
            out.label = std::move(next);
            dwell_start = out.time;
        }
    }
}

/// Serial evolution until n_c consecutive visited states share one label
/// (n_c = 0 behaves as 1). Stops early once `time_budget` or `step_budget` is used.
template <JumpDynamics D>
DecorrelationResult<typename D::State> decorrelation_stage_embedded(
    const D& dyn, const MetastableLabeler<typename D::State>& labeler, std::uint64_t n_c, typename D::State x,
    std::span<const Observable<typename D::State>> obs, double time_budget, std::uint64_t step_budget,
    RngStream& rng) {
    DecorrelationResult<typename D::State> out{labeler.label(x), std::move(x), false, 0, 0, StageSums(obs.size())};
    auto& s = out.state;
    const std::uint64_t need = std::max<std::uint64_t>(n_c, 1);
    std::uint64_t run = out.label ? 1 : 0;
    while (run < need) {
        if (out.time >= time_budget || out.steps >= step_budget) {
            out.horizon_reached = true;
            out.label.reset();
            return out;
        }
        const double q = dyn.total_rate(s);
        const double dt = rng.exponential(q);
        detail::accumulate(out.sums, obs, s, q, dt);
        out.time += dt;
        dyn.fire(s, rng.uniform() * q);
        ++out.steps;
        auto next = labeler.label(s);
        if (next && next == out.label) {
            ++run;
        } else {
            run = next ? 1 : 0;
            out.label = std::move(next);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------

template <class State>
struct ParallelStageResult {
    State exit_state;
    double stage_time = 0;           // R T* (continuous clock) or R (N* - 1) + K (steps)
    std::size_t winner = 0;          // M or K, 1-based
    double first_exit = 0;           // T* or N*
    StageSums sums;                  // replica contributions, reduced in replica order
    std::uint64_t cost = 0;          // synchronous wall-cost in events
    std::vector<std::uint64_t> replica_events;
};

struct ParallelOptions {
    std::uint64_t block = 256;  // jumps per replica between synchronizations; results do not depend on it
    std::uint64_t max_events_per_replica = 100'000'000;
};

namespace detail {

template <class State>
void check_samples(const Membership<State>& in_w, std::span<const State> samples) {
    if (samples.empty()) throw InputError("parallel stage needs at least one replica");
    for (const auto& x : samples)
        if (!in_w(x)) throw InputError("parallel stage sample is outside W");
}

}  // namespace detail

/// Continuous-time parallel stage. Replicas run until T* = min_r T^r; a replica
/// is halted once its clock reaches the smallest exit time seen so far. Each
/// replica logs its jumps so that its integral is cut exactly at T*.
template <JumpDynamics D>
ParallelStageResult<typename D::State> parallel_stage_ctmc(const D& dyn, const Membership<typename D::State>& in_w,
                                                           std::span<const typename D::State> samples,
                                                           std::span<const Observable<typename D::State>> obs,
                                                           const RngStream& rng, WorkerPool& pool,
                                                           const ParallelOptions& opt = {}) {
    using State = typename D::State;
    detail::check_samples(in_w, samples);
    const std::size_t replicas = samples.size();
    const std::size_t width = obs.size() + 1;  // f_1..f_m, q

    struct Replica {
        State x;
        RngStream stream;
        std::vector<double> dt;
        std::vector<double> values;
        double time = 0;
        bool exited = false;
        bool halted = false;
    };
    std::vector<Replica> reps;
    reps.reserve(replicas);
    for (std::size_t r = 0; r < replicas; ++r) reps.push_back({samples[r], rng.child(r), {}, {}});

    double t_min = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> active(replicas);
    std::iota(active.begin(), active.end(), std::size_t{0});
    while (!active.empty()) {
        const double bound = t_min;
        pool.for_each(active.size(), [&](std::size_t i) {
            Replica& rep = reps[active[i]];
            for (std::uint64_t k = 0; k < opt.block && rep.time < bound; ++k) {
                if (rep.dt.size() >= opt.max_events_per_replica)
                    throw BudgetExceededError("parallel stage replica exceeded its event budget");
                const double q = dyn.total_rate(rep.x);
                const double dt = rep.stream.exponential(q);
                for (const auto& f : obs) rep.values.push_back(f(rep.x));
                rep.values.push_back(q);
                rep.dt.push_back(dt);
                rep.time += dt;
                dyn.fire(rep.x, rep.stream.uniform() * q);
                if (!in_w(rep.x)) {
                    rep.exited = true;
                    return;
                }
            }
        });
        for (auto r : active)
            if (reps[r].exited) t_min = std::min(t_min, reps[r].time);
        std::erase_if(active, [&](std::size_t r) {
            Replica& rep = reps[r];
            if (!rep.exited && rep.time >= t_min) rep.halted = true;
            return rep.exited || rep.halted;
        });
    }

    ParallelStageResult<State> out{State{}, 0, 0, t_min, StageSums(obs.size()), 0,
                                   std::vector<std::uint64_t>(replicas)};
    for (std::size_t r = 0; r < replicas; ++r) {
        if (reps[r].exited && reps[r].time == t_min) {
            out.winner = r + 1;
            out.exit_state = reps[r].x;
            break;
        }
    }
    out.stage_time = static_cast<double>(replicas) * t_min;

    // integrals cut at T*, then reduced in replica order
    for (std::size_t r = 0; r < replicas; ++r) {
        const Replica& rep = reps[r];
        out.replica_events[r] = rep.dt.size();
        StageSums part(obs.size());
        double t = 0;
        for (std::size_t i = 0; i < rep.dt.size() && t < t_min; ++i) {
            const double next = t + rep.dt[i];
            const double piece = next <= t_min ? rep.dt[i] : t_min - t;
            const double* v = &rep.values[i * width];
            for (std::size_t k = 0; k < obs.size(); ++k) part.observables[k] += v[k] * piece;
            part.rate_integral += v[obs.size()] * piece;
            part.unit_integral += piece;
            t = next;
        }
        out.sums += part;
    }

    // Synchronous wall-cost: every replica fires one jump per tick; the
    // running minimum exit time at tick w only knows exits at ticks <= w.
    std::vector<std::pair<std::uint64_t, double>> exits;
    for (const auto& rep : reps)
        if (rep.exited) exits.emplace_back(rep.dt.size(), rep.time);
    std::sort(exits.begin(), exits.end());
    for (const auto& rep : reps) {
        std::uint64_t stop = rep.dt.size();
        double t = 0;
        double known = std::numeric_limits<double>::infinity();
        std::size_t e = 0;
        for (std::uint64_t w = 1; w <= rep.dt.size(); ++w) {
            t += rep.dt[w - 1];
            while (e < exits.size() && exits[e].first <= w) known = std::min(known, exits[e++].second);
            if (t >= known) {
                stop = w;
                break;
            }
        }
        out.cost = std::max(out.cost, stop);
    }
    return out;
}

/// Embedded-chain parallel stage. Replicas take lockstep jumps; the stage ends
/// in the first epoch N* in which some replica leaves W, and K is the smallest
/// index among the replicas leaving in that epoch. Replicas r <= K contribute
/// their jump N*-1, replicas r > K only jumps 0..N*-2.
template <JumpDynamics D>
ParallelStageResult<typename D::State> parallel_stage_embedded(
    const D& dyn, const Membership<typename D::State>& in_w, std::span<const typename D::State> samples,
    std::span<const Observable<typename D::State>> obs, const RngStream& rng, WorkerPool& pool,
    const ParallelOptions& opt = {}) {
    using State = typename D::State;
    detail::check_samples(in_w, samples);
    const std::size_t replicas = samples.size();
    const std::size_t width = obs.size() + 2;  // f_1..f_m, q, dt

    struct Replica {
        State x;
        RngStream stream;
        StageSums settled;            // jumps known to precede N* - 1
        std::vector<double> pending;  // this round's jumps
        std::uint64_t steps = 0;
        std::uint64_t exit_step = 0;  // 0 while inside W
    };
    std::vector<Replica> reps;
    reps.reserve(replicas);
    for (std::size_t r = 0; r < replicas; ++r) reps.push_back({samples[r], rng.child(r), StageSums(obs.size())});

    std::uint64_t round_start = 0;
    std::uint64_t first_exit = 0;
    while (first_exit == 0) {
        if (round_start >= opt.max_events_per_replica)
            throw BudgetExceededError("parallel stage exceeded its event budget");
        pool.for_each(replicas, [&](std::size_t r) {
            Replica& rep = reps[r];
            rep.pending.clear();
            for (std::uint64_t k = 0; k < opt.block; ++k) {
                const double q = dyn.total_rate(rep.x);
                const double dt = rep.stream.exponential(q);
                for (const auto& f : obs) rep.pending.push_back(f(rep.x));
                rep.pending.push_back(q);
                rep.pending.push_back(dt);
                dyn.fire(rep.x, rep.stream.uniform() * q);
                ++rep.steps;
                if (!in_w(rep.x)) {
                    rep.exit_step = rep.steps;
                    return;
                }
            }
        });
        for (const auto& rep : reps)
            if (rep.exit_step != 0 && (first_exit == 0 || rep.exit_step < first_exit)) first_exit = rep.exit_step;
        const std::uint64_t keep = first_exit == 0 ? std::numeric_limits<std::uint64_t>::max() : first_exit;
        std::size_t winner = 0;
        for (std::size_t r = 0; r < replicas && first_exit != 0; ++r)
            if (reps[r].exit_step == first_exit) {
                winner = r + 1;
                break;
            }
        for (std::size_t r = 0; r < replicas; ++r) {
            Replica& rep = reps[r];
            // global jump index i (0-based) counts if i <= N*-2, or i == N*-1 and r <= K
            const std::uint64_t limit = first_exit == 0 ? keep : (r + 1 <= winner ? first_exit : first_exit - 1);
            const std::size_t n = rep.pending.size() / width;
            for (std::size_t i = 0; i < n && round_start + i < limit; ++i) {
                const double* v = &rep.pending[i * width];
                const double dt = v[obs.size() + 1];
                for (std::size_t k = 0; k < obs.size(); ++k) rep.settled.observables[k] += v[k] * dt;
                rep.settled.rate_integral += v[obs.size()] * dt;
                rep.settled.unit_integral += dt;
            }
        }
        if (first_exit != 0) {
            ParallelStageResult<State> out{reps[winner - 1].x,
                                           static_cast<double>(replicas * (first_exit - 1) + winner),
                                           winner,
                                           static_cast<double>(first_exit),
                                           StageSums(obs.size()),
                                           first_exit,
                                           std::vector<std::uint64_t>(replicas)};
            for (std::size_t r = 0; r < replicas; ++r) {
                out.sums += reps[r].settled;
                out.replica_events[r] = reps[r].steps;
            }
            return out;
        }
        round_start += opt.block;
    }
    return {};  // unreachable
}

// ---------------------------------------------------------------------------

enum class Dephasing { rejection, fleming_viot };

struct ParRepSettings {
    std::size_t replicas = 1;
    double t_c = 0.01;            // continuous-time engine
    double t_p = 0.01;
    std::uint64_t n_c = 15;       // embedded engine
    std::uint64_t n_p = 15;
    Dephasing dephasing = Dephasing::rejection;
    double time_horizon = std::numeric_limits<double>::infinity();          // T_end
    std::uint64_t step_horizon = std::numeric_limits<std::uint64_t>::max();  // N_end (embedded only)
    DephaseOptions dephase;
    ParallelOptions parallel;
};

/// One decorrelation / dephasing / parallel cycle as it entered the estimator.
struct CycleRecord {
    std::uint64_t cycle = 0;
    Label label;                      // set of the cycle; empty if the horizon cut decorrelation
    double decorrelation_time = 0;
    std::uint64_t decorrelation_steps = 0;
    std::uint64_t dephase_cost = 0;
    std::uint64_t dephase_restarts = 0;
    bool parallel = false;
    double stage_time = 0;            // R T* or R (N* - 1) + K
    std::size_t winner = 0;
    double first_exit = 0;            // T* or N*
    std::uint64_t parallel_cost = 0;
    std::vector<double> contribution; // F(f) increments per observable
    double clock = 0;                 // T_sim increment (CTMC) or F(1) increment (embedded)
    double steps = 0;                 // N_sim increment (embedded)
    double rate_integral = 0;         // increment of the integral of q
    std::uint64_t events = 0;         // all jumps simulated in the cycle, every replica

    std::uint64_t cost() const { return decorrelation_steps + dephase_cost + parallel_cost; }
};

/// F(f)_sim with its clock, the per-cycle log and virtual-clock totals.
struct ParRepAccumulator {
    std::vector<double> F;
    double clock = 0;                 // T_sim, or F(1)_sim for the embedded engine
    std::uint64_t steps = 0;          // N_sim (embedded)
    double rate_integral = 0;
    std::uint64_t virtual_cost = 0;
    std::uint64_t events = 0;
    std::vector<CycleRecord> cycles;

    explicit ParRepAccumulator(std::size_t observables = 0) : F(observables, 0.0) {}

    void add(CycleRecord rec) {
        for (std::size_t k = 0; k < F.size(); ++k) F[k] += rec.contribution[k];
        clock += rec.clock;
        steps += static_cast<std::uint64_t>(rec.steps);
        rate_integral += rec.rate_integral;
        virtual_cost += rec.cost();
        events += rec.events;
        cycles.push_back(std::move(rec));
    }

    std::vector<double> estimates() const {
        std::vector<double> e(F.size());
        for (std::size_t k = 0; k < F.size(); ++k) e[k] = F[k] / clock;
        return e;
    }
};

template <class State>
struct ParRepRun {
    ParRepAccumulator accumulator;
    State final_state;
};

namespace detail {

inline void fold(CycleRecord& rec, const StageSums& s) {
    if (rec.contribution.empty()) rec.contribution.assign(s.observables.size(), 0.0);
    for (std::size_t k = 0; k < s.observables.size(); ++k) rec.contribution[k] += s.observables[k];
    rec.rate_integral += s.rate_integral;
}

}  // namespace detail

/// Continuous-time ParRep: loops decorrelation, rejection dephasing and the
/// parallel stage until T_sim >= T_end. The last cycle may overshoot T_end.
template <JumpDynamics D>
ParRepRun<typename D::State> run_ctmc_parrep(const D& dyn, const MetastableLabeler<typename D::State>& labeler,
                                             std::span<const Observable<typename D::State>> obs,
                                             typename D::State x0, const ParRepSettings& cfg,
                                             const RngStream& rng, WorkerPool& pool) {
    using State = typename D::State;
    if (cfg.replicas == 0) throw InputError("replicas must be >= 1");
    if (!(cfg.time_horizon > 0) || std::isinf(cfg.time_horizon)) throw InputError("T_end must be positive and finite");
    if (cfg.dephasing != Dephasing::rejection)
        throw InputError("the continuous-time engine supports rejection dephasing only");

    ParRepRun<State> run{ParRepAccumulator(obs.size()), std::move(x0)};
    auto& acc = run.accumulator;
    RngStream main = rng.child(0);
    for (std::uint64_t cycle = 0; acc.clock < cfg.time_horizon; ++cycle) {
        CycleRecord rec;
        rec.cycle = cycle;
        auto dec = decorrelation_stage_ctmc(dyn, labeler, cfg.t_c, std::move(run.final_state), obs,
                                            cfg.time_horizon - acc.clock, main);
        run.final_state = std::move(dec.state);
        detail::fold(rec, dec.sums);
        rec.decorrelation_time = dec.time;
        rec.decorrelation_steps = dec.steps;
        rec.clock = dec.time;
        rec.events = dec.steps;
        if (dec.horizon_reached) {
            acc.add(std::move(rec));
            break;
        }
        rec.label = *dec.label;
        const auto in_w = labeler.membership(rec.label);
        auto deph = rejection_dephase(dyn, in_w, run.final_state, cfg.replicas, ContinuousThreshold{cfg.t_p},
                                      rng.child({1, cycle}), pool, cfg.dephase);
        rec.dephase_cost = deph.cost();
        rec.dephase_restarts = deph.restarts;
        for (auto w : deph.work) rec.events += w;
        auto par = parallel_stage_ctmc(dyn, in_w, std::span<const State>(deph.states), obs,
                                       rng.child({2, cycle}), pool, cfg.parallel);
        detail::fold(rec, par.sums);
        rec.parallel = true;
        rec.stage_time = par.stage_time;
        rec.winner = par.winner;
        rec.first_exit = par.first_exit;
        rec.parallel_cost = par.cost;
        for (auto e : par.replica_events) rec.events += e;
        rec.clock += par.stage_time;
        run.final_state = std::move(par.exit_state);
        acc.add(std::move(rec));
    }
    return run;
}

/// Embedded ParRep: clock N_sim in jumps, estimator F(f)_sim / F(1)_sim. Stops
/// once N_sim >= N_end or F(1)_sim >= T_end, whichever is configured first.
template <JumpDynamics D>
ParRepRun<typename D::State> run_embedded_parrep(const D& dyn, const MetastableLabeler<typename D::State>& labeler,
                                                 std::span<const Observable<typename D::State>> obs,
                                                 typename D::State x0, const ParRepSettings& cfg,
                                                 const RngStream& rng, WorkerPool& pool) {
    using State = typename D::State;
    if (cfg.replicas == 0) throw InputError("replicas must be >= 1");
    if (std::isinf(cfg.time_horizon) && cfg.step_horizon == std::numeric_limits<std::uint64_t>::max())
        throw InputError("embedded ParRep needs T_end or N_end");
    if (!(cfg.time_horizon > 0) || cfg.step_horizon == 0) throw InputError("horizon must be positive");
    if (cfg.dephasing == Dephasing::fleming_viot && cfg.replicas < 2)
        throw InputError("Fleming-Viot dephasing needs at least two replicas");

    ParRepRun<State> run{ParRepAccumulator(obs.size()), std::move(x0)};
    auto& acc = run.accumulator;
    RngStream main = rng.child(0);
    for (std::uint64_t cycle = 0; acc.clock < cfg.time_horizon && acc.steps < cfg.step_horizon; ++cycle) {
        CycleRecord rec;
        rec.cycle = cycle;
        auto dec = decorrelation_stage_embedded(dyn, labeler, cfg.n_c, std::move(run.final_state), obs,
                                                cfg.time_horizon - acc.clock, cfg.step_horizon - acc.steps, main);
        run.final_state = std::move(dec.state);
        detail::fold(rec, dec.sums);
        rec.decorrelation_time = dec.time;
        rec.decorrelation_steps = dec.steps;
        rec.clock = dec.sums.unit_integral;
        rec.steps = static_cast<double>(dec.steps);
        rec.events = dec.steps;
        if (dec.horizon_reached) {
            acc.add(std::move(rec));
            break;
        }
        rec.label = *dec.label;
        const auto in_w = labeler.membership(rec.label);
        DephaseOutcome<State> deph;
        if (cfg.dephasing == Dephasing::rejection) {
            deph = rejection_dephase(dyn, in_w, run.final_state, cfg.replicas, StepThreshold{cfg.n_p},
                                     rng.child({1, cycle}), pool, cfg.dephase);
        } else {
            const std::vector<State> seeds(cfg.replicas, run.final_state);
            deph = fleming_viot_dephase(dyn, in_w, std::span<const State>(seeds), cfg.n_p, rng.child({1, cycle}),
                                        pool, cfg.dephase);
        }
        rec.dephase_cost = deph.cost();
        rec.dephase_restarts = deph.restarts;
        for (auto w : deph.work) rec.events += w;
        auto par = parallel_stage_embedded(dyn, in_w, std::span<const State>(deph.states), obs,
                                           rng.child({2, cycle}), pool, cfg.parallel);
        detail::fold(rec, par.sums);
        rec.parallel = true;
        rec.stage_time = par.stage_time;
        rec.winner = par.winner;
        rec.first_exit = par.first_exit;
        rec.parallel_cost = par.cost;
        for (auto e : par.replica_events) rec.events += e;
        rec.clock += par.sums.unit_integral;
        rec.steps += par.stage_time;
        run.final_state = std::move(par.exit_state);
        acc.add(std::move(rec));
    }
    return run;
}

}  // namespace parrep
