#pragma once

#include <concepts>
#include <cstddef>
#include <functional>
#include <string>

#include "parrep/net_model.hpp"

namespace parrep {

/// A jump process that can report q(x) and fire one channel in place.
///
/// `fire(x, target)` selects the first channel whose cumulative rate exceeds
/// `target` (a value in [0, q(x))) and applies it to x.
template <class D>
concept JumpDynamics = requires(const D& d, typename D::State& x, const typename D::State& cx) {
    { d.total_rate(cx) } -> std::convertible_to<double>;
    { d.fire(x, 0.5) } -> std::convertible_to<std::size_t>;
};

template <class State>
using Observable = std::function<double(const State&)>;

template <class State>
using Membership = std::function<bool(const State&)>;

/// Reaction-network dynamics: one channel per reaction.
class NetworkDynamics {
  public:
    using State = PopulationState;

    explicit NetworkDynamics(const ReactionNetwork& net) : net_(&net) {}

    const ReactionNetwork& network() const { return *net_; }

    double total_rate(const State& x) const { return parrep::total_rate(*net_, x); }

    std::size_t fire(State& x, double target) const {
        const auto& rs = net_->reactions();
        double cumulative = 0;
        std::size_t last_open = rs.size();
        for (std::size_t j = 0; j < rs.size(); ++j) {
            const double a = propensity(rs[j], x);
            if (a <= 0) continue;
            last_open = j;
            cumulative += a;
            if (target < cumulative) {
                apply_reaction_inplace(x, j, *net_);
                return j;
            }
        }
        // target landed on the rounding edge of the cumulative sum
        if (last_open == rs.size()) throw AbsorbingStateError("all propensities vanish: absorbing state");
        apply_reaction_inplace(x, last_open, *net_);
        return last_open;
    }

  private:
    const ReactionNetwork* net_;
};

/// Dynamics of an explicit finite chain; states are row indices, and the
/// channel index returned by fire() is the destination state.
template <typename Scalar = double>
class ChainDynamics {
  public:
    using State = Eigen::Index;
    using Matrix = typename ExplicitChain<Scalar>::Matrix;

    explicit ChainDynamics(const ExplicitChain<Scalar>& chain) : q_(&chain.generator()) {}

    double total_rate(const State& x) const {
        const double q = -static_cast<double>((*q_)(x, x));
        if (!(q > 0)) throw AbsorbingStateError("state " + std::to_string(x) + " is absorbing");
        return q;
    }

    std::size_t fire(State& x, double target) const {
        double cumulative = 0;
        Eigen::Index last_open = -1;
        for (Eigen::Index y = 0; y < q_->cols(); ++y) {
            if (y == x) continue;
            const double rate = static_cast<double>((*q_)(x, y));
            if (rate <= 0) continue;
            last_open = y;
            cumulative += rate;
            if (target < cumulative) {
                x = y;
                return static_cast<std::size_t>(y);
            }
        }
        if (last_open < 0) throw AbsorbingStateError("state " + std::to_string(x) + " is absorbing");
        x = last_open;
        return static_cast<std::size_t>(last_open);
    }

  private:
    const Matrix* q_;
};

inline Observable<PopulationState> make_observable(ObservableSpec spec) {
    return [spec = std::move(spec)](const PopulationState& x) { return evaluate(spec, x); };
}

inline Observable<Eigen::Index> indicator(Eigen::Index state) {
    return [state](const Eigen::Index& x) { return x == state ? 1.0 : 0.0; };
}

template <class State>
Observable<State> constant_one() {
    return [](const State&) { return 1.0; };
}

}  // namespace parrep
