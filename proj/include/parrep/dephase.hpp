#pragma once

// QSD sampling inside a metastable set: rejection and Fleming-Viot.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "parrep/dynamics.hpp"
#include "parrep/rng.hpp"
#include "parrep/ssa.hpp"
#include "parrep/workers.hpp"

namespace parrep {

/// Dwell requirement measured on the continuous clock (t_p).
struct ContinuousThreshold {
    double time;
};
/// Dwell requirement measured in embedded steps (n_p).
struct StepThreshold {
    std::uint64_t steps;
};
using DephaseThreshold = std::variant<ContinuousThreshold, StepThreshold>;

template <class State>
struct DephaseOutcome {
    std::vector<State> states;
    std::vector<std::uint64_t> work;  // jumps simulated per replica, rejected attempts included
    std::uint64_t restarts = 0;       // rejections, or FV redistributions plus full restarts
    std::uint64_t full_restarts = 0;  // FV only: every replica left in the same epoch

    /// Synchronous wall-cost: the slowest replica.
    std::uint64_t cost() const { return work.empty() ? 0 : *std::max_element(work.begin(), work.end()); }
};

struct DephaseOptions {
    std::uint64_t max_jumps_per_replica = 1'000'000;
    std::uint64_t max_full_restarts = 10'000;
};

/// Each replica evolves independently from `seed`; a replica that leaves W
/// before dwelling for the threshold restarts from `seed`. Replica r draws
/// from rng.child(r).
template <JumpDynamics D>
DephaseOutcome<typename D::State> rejection_dephase(const D& dyn, const Membership<typename D::State>& in_w,
                                                    const typename D::State& seed, std::size_t replicas,
                                                    DephaseThreshold threshold, const RngStream& rng,
                                                    WorkerPool& pool, const DephaseOptions& opt = {}) {
    using State = typename D::State;
    if (replicas == 0) throw InputError("need at least one replica");
    if (!in_w(seed)) throw InputError("dephasing seed is outside W");
    std::visit([](auto t) {
        if constexpr (std::is_same_v<decltype(t), ContinuousThreshold>) {
            if (!(t.time >= 0)) throw InputError("t_p must be non-negative");
        }
    }, threshold);

    DephaseOutcome<State> out{std::vector<State>(replicas, seed), std::vector<std::uint64_t>(replicas, 0)};
    std::vector<std::uint64_t> rejections(replicas, 0);
    std::vector<char> exhausted(replicas, 0);

    pool.for_each(replicas, [&](std::size_t r) {
        RngStream stream = rng.child(r);
        State& x = out.states[r];
        std::uint64_t& work = out.work[r];
        if (const auto* ct = std::get_if<ContinuousThreshold>(&threshold)) {
            double dwell = 0;
            while (true) {
                const double q = dyn.total_rate(x);
                const double dt = stream.exponential(q);
                if (dwell + dt >= ct->time) return;
                if (work == opt.max_jumps_per_replica) break;
                dyn.fire(x, stream.uniform() * q);
                ++work;
                dwell += dt;
                if (!in_w(x)) {
                    x = seed;
                    dwell = 0;
                    ++rejections[r];
                }
            }
        } else {
            const auto steps = std::get<StepThreshold>(threshold).steps;
            std::uint64_t dwell = 0;
            while (dwell < steps) {
                if (work == opt.max_jumps_per_replica) break;
                embedded_step(dyn, x, stream);
                ++work;
                ++dwell;
                if (!in_w(x)) {
                    x = seed;
                    dwell = 0;
                    ++rejections[r];
                }
            }
            if (dwell == steps) return;
        }
        exhausted[r] = 1;
    });

    out.restarts = std::accumulate(rejections.begin(), rejections.end(), std::uint64_t{0});
    if (std::find(exhausted.begin(), exhausted.end(), 1) != exhausted.end()) {
        const double attempts = static_cast<double>(out.restarts) + static_cast<double>(replicas);
        const double total_work = static_cast<double>(std::accumulate(out.work.begin(), out.work.end(), std::uint64_t{0}));
        throw BudgetExceededError(
            "rejection dephasing exceeded " + std::to_string(opt.max_jumps_per_replica) +
            " jumps per replica: " + std::to_string(out.restarts) + " escapes, mean " +
            std::to_string(total_work / attempts) + " jumps per attempt; W is likely not metastable");
    }
    return out;
}

/// Fleming-Viot sampler: replicas advance in lockstep embedded steps; a
/// replica that leaves W takes the post-step state of a survivor chosen
/// uniformly (coordinator stream rng.child(R)). If every replica leaves in
/// the same epoch the whole pass restarts from `seeds`.
template <JumpDynamics D>
DephaseOutcome<typename D::State> fleming_viot_dephase(const D& dyn, const Membership<typename D::State>& in_w,
                                                       std::span<const typename D::State> seeds,
                                                       std::uint64_t steps, const RngStream& rng,
                                                       WorkerPool& pool, const DephaseOptions& opt = {}) {
    using State = typename D::State;
    const std::size_t replicas = seeds.size();
    if (replicas < 2) throw InputError("Fleming-Viot sampling needs at least two replicas");
    for (const auto& s : seeds)
        if (!in_w(s)) throw InputError("dephasing seed is outside W");

    DephaseOutcome<State> out{std::vector<State>(seeds.begin(), seeds.end()),
                              std::vector<std::uint64_t>(replicas, 0)};
    std::vector<RngStream> streams;
    streams.reserve(replicas);
    for (std::size_t r = 0; r < replicas; ++r) streams.push_back(rng.child(r));
    RngStream coordinator = rng.child(replicas);
    std::vector<char> alive(replicas, 1);
    std::vector<std::size_t> survivors;
    std::uint64_t epochs = 0;

    for (std::uint64_t epoch = 0; epoch < steps;) {
        pool.for_each(replicas, [&](std::size_t r) {
            embedded_step(dyn, out.states[r], streams[r]);
            alive[r] = in_w(out.states[r]) ? 1 : 0;
        });
        ++epochs;
        survivors.clear();
        for (std::size_t r = 0; r < replicas; ++r)
            if (alive[r]) survivors.push_back(r);
        if (survivors.empty()) {
            if (++out.full_restarts > opt.max_full_restarts)
                throw BudgetExceededError("Fleming-Viot sampling restarted " +
                                          std::to_string(opt.max_full_restarts) +
                                          " times; W is likely not metastable");
            ++out.restarts;
            std::copy(seeds.begin(), seeds.end(), out.states.begin());
            epoch = 0;
            continue;
        }
        for (std::size_t r = 0; r < replicas; ++r) {
            if (alive[r]) continue;
            out.states[r] = out.states[survivors[coordinator.below(survivors.size())]];
            ++out.restarts;
        }
        ++epoch;
    }
    std::fill(out.work.begin(), out.work.end(), epochs);
    return out;
}

}  // namespace parrep
