#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "parrep/dynamics.hpp"
#include "parrep/rng.hpp"

namespace parrep {

template <class State>
struct Jump {
    State next_state;
    double holding_time;
    std::size_t reaction_index;
};

struct StepRecord {
    double holding_time;
    std::size_t channel;
};

/// One SSA jump in place. Consumes exactly two draws: holding time, then channel.
template <JumpDynamics D>
StepRecord ssa_step(const D& dyn, typename D::State& x, RngStream& rng) {
    const double q = dyn.total_rate(x);
    const double dt = rng.exponential(q);
    const double target = rng.uniform() * q;
    return {dt, dyn.fire(x, target)};
}

/// One embedded-chain step in place. Consumes exactly one draw.
template <JumpDynamics D>
std::size_t embedded_step(const D& dyn, typename D::State& x, RngStream& rng) {
    const double q = dyn.total_rate(x);
    return dyn.fire(x, rng.uniform() * q);
}

template <JumpDynamics D>
Jump<typename D::State> ssa_jump(const D& dyn, const typename D::State& x, RngStream& rng) {
    auto next = x;
    const auto step = ssa_step(dyn, next, rng);
    return {std::move(next), step.holding_time, step.channel};
}

template <JumpDynamics D>
std::pair<typename D::State, std::size_t> embedded_jump(const D& dyn, const typename D::State& x,
                                                        RngStream& rng) {
    auto next = x;
    const auto j = embedded_step(dyn, next, rng);
    return {std::move(next), j};
}

/// Running sums of f(X_n) * dtau_n per observable.
struct TrajectoryAccumulator {
    std::vector<double> time_integral;
    double elapsed_time = 0;
    std::uint64_t step_count = 0;

    explicit TrajectoryAccumulator(std::size_t observables = 0) : time_integral(observables, 0.0) {}
};

template <class State>
struct SerialResult {
    TrajectoryAccumulator accumulator;
    State final_state;
};

/// Thrown by run_serial when the trajectory hits an absorbing state.
template <class State>
class SerialAborted : public AbsorbingStateError {
  public:
    SerialAborted(const std::string& what, SerialResult<State> partial)
        : AbsorbingStateError(what), partial_(std::move(partial)) {}
    const SerialResult<State>& partial() const { return partial_; }

  private:
    SerialResult<State> partial_;
};

/// Direct simulation on [0, horizon]. The holding interval that straddles the
/// horizon is cut at the horizon, so elapsed_time ends exactly at `horizon`;
/// its channel draw is never taken.
template <JumpDynamics D>
SerialResult<typename D::State> run_serial(const D& dyn, typename D::State x0,
                                           std::span<const Observable<typename D::State>> observables,
                                           double horizon, RngStream& rng) {
    using State = typename D::State;
    if (!(horizon > 0)) throw InputError("horizon must be positive");
    SerialResult<State> out{TrajectoryAccumulator(observables.size()), std::move(x0)};
    auto& acc = out.accumulator;
    State& x = out.final_state;
    while (true) {
        double q;
        try {
            q = dyn.total_rate(x);
        } catch (const AbsorbingStateError& e) {
            throw SerialAborted<State>(e.what(), out);
        }
        double dt = rng.exponential(q);
        const bool last = acc.elapsed_time + dt >= horizon;
        if (last) dt = horizon - acc.elapsed_time;
        for (std::size_t k = 0; k < observables.size(); ++k) acc.time_integral[k] += observables[k](x) * dt;
        acc.elapsed_time += dt;
        if (last) break;
        dyn.fire(x, rng.uniform() * q);
        ++acc.step_count;
    }
    return out;
}

/// run_serial over `slices` consecutive windows of equal length, continuing
/// state and stream; one accumulator per window (batch-means input).
template <JumpDynamics D>
std::pair<std::vector<TrajectoryAccumulator>, typename D::State>
run_serial_slices(const D& dyn, typename D::State x0,
                  std::span<const Observable<typename D::State>> observables, double horizon,
                  std::size_t slices, RngStream& rng) {
    if (slices == 0) throw InputError("need at least one slice");
    std::vector<TrajectoryAccumulator> windows;
    windows.reserve(slices);
    const double width = horizon / static_cast<double>(slices);
    for (std::size_t s = 0; s < slices; ++s) {
        auto r = run_serial(dyn, std::move(x0), observables, width, rng);
        windows.push_back(std::move(r.accumulator));
        x0 = std::move(r.final_state);
    }
    return {std::move(windows), std::move(x0)};
}

}  // namespace parrep
