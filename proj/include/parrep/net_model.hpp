#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "parrep/errors.hpp"

namespace parrep {

using Count = std::int64_t;

/// Molecule counts per species; the CTMC state of a reaction network.
struct PopulationState {
    std::vector<Count> counts;

    PopulationState() = default;
    explicit PopulationState(std::vector<Count> c) : counts(std::move(c)) {}
    PopulationState(std::initializer_list<Count> c) : counts(c) {}

    std::size_t size() const { return counts.size(); }
    Count operator[](std::size_t i) const { return counts[i]; }
    Count& operator[](std::size_t i) { return counts[i]; }
    bool operator==(const PopulationState&) const = default;
};

struct ConstantRate {
    double rate;
};

struct LinearRate {
    double rate;
    std::size_t species;
};

struct ReactantTerm {
    std::size_t species;
    Count multiplicity;
    bool operator==(const ReactantTerm&) const = default;
};

/// c * prod_i x_i (x_i - 1) ... (x_i - m_i + 1)
struct MassActionRate {
    double rate;
    std::vector<ReactantTerm> reactants;
};

using Propensity = std::variant<ConstantRate, LinearRate, MassActionRate>;

struct Reaction {
    Propensity propensity;
    std::vector<Count> state_change;
};

double rate_constant(const Propensity& p);

class ReactionNetwork {
  public:
    ReactionNetwork(std::vector<std::string> species_names, std::vector<Reaction> reactions,
                    std::vector<bool> slow_reaction_flags);
    ReactionNetwork(std::vector<std::string> species_names, std::vector<Reaction> reactions);

    std::size_t species_count() const { return species_.size(); }
    std::size_t reaction_count() const { return reactions_.size(); }
    const std::vector<std::string>& species_names() const { return species_; }
    const std::vector<Reaction>& reactions() const { return reactions_; }
    const Reaction& reaction(std::size_t j) const { return reactions_.at(j); }
    const std::vector<bool>& slow_reaction_flags() const { return slow_; }
    bool is_slow(std::size_t j) const { return slow_.at(j); }

    /// Index of a species by name; throws InputError if undeclared.
    std::size_t species_index(const std::string& name) const;

    void check_state(const PopulationState& x) const;

  private:
    std::vector<std::string> species_;
    std::vector<Reaction> reactions_;
    std::vector<bool> slow_;
};

/// Propensity of one reaction. Does not validate dimensions.
double propensity(const Reaction& r, const PopulationState& x);

/// lambda_j(x) for every reaction, written into `out`.
void propensities(const ReactionNetwork& net, const PopulationState& x, std::span<double> out);
std::vector<double> propensities(const ReactionNetwork& net, const PopulationState& x);

/// q(x) = sum_j lambda_j(x). Throws AbsorbingStateError when every channel is closed.
double total_rate(const ReactionNetwork& net, const PopulationState& x);

/// x + eta_j, with negative-count and overflow checks.
void apply_reaction_inplace(PopulationState& x, std::size_t j, const ReactionNetwork& net);
PopulationState apply_reaction(const PopulationState& x, std::size_t j, const ReactionNetwork& net);

// ---------------------------------------------------------------------------

struct LinearCombination {
    std::vector<double> weights;
};
struct Coordinate {
    std::size_t index;
};
struct ConstantValue {
    double value;
};

/// Observable f: E -> R on population states.
using ObservableSpec = std::variant<LinearCombination, Coordinate, ConstantValue>;

double evaluate(const ObservableSpec& f, const PopulationState& x);
void check_observable(const ObservableSpec& f, std::size_t species_count);

// ---------------------------------------------------------------------------

/// Finite CTMC given by a dense generator. States are indices 0..n-1.
template <typename Scalar = double>
class ExplicitChain {
  public:
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

    static constexpr Eigen::Index kMaxStates = 10000;

    explicit ExplicitChain(Matrix generator) : q_(std::move(generator)) {
        using std::abs;
        if (q_.rows() != q_.cols() || q_.rows() == 0)
            throw InputError("generator must be a non-empty square matrix");
        if (q_.rows() > kMaxStates)
            throw InputError("explicit chains are limited to 10^4 states");
        for (Eigen::Index x = 0; x < q_.rows(); ++x) {
            Scalar row_sum = 0;
            Scalar scale = 0;
            for (Eigen::Index y = 0; y < q_.cols(); ++y) {
                if (x != y && q_(x, y) < 0)
                    throw InputError("negative off-diagonal rate at (" + std::to_string(x) + "," +
                                     std::to_string(y) + ")");
                row_sum += q_(x, y);
                scale = std::max(scale, abs(q_(x, y)));
            }
            if (abs(row_sum) > Scalar(1e-12) * std::max(Scalar(1), scale))
                throw InputError("generator row " + std::to_string(x) + " does not sum to zero");
            if (!(q_(x, x) < 0))
                throw AbsorbingStateError("state " + std::to_string(x) + " has zero exit rate");
        }
    }

    Eigen::Index size() const { return q_.rows(); }
    const Matrix& generator() const { return q_; }
    Scalar rate(Eigen::Index x) const { return -q_(x, x); }

  private:
    Matrix q_;
};

/// Transition matrix of the embedded (jump) chain: p(x,y) = q(x,y)/q(x), p(x,x) = 0.
template <typename Derived>
auto embedded_matrix(const Eigen::MatrixBase<Derived>& q) {
    using Scalar = typename Derived::Scalar;
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> p = q;
    for (Eigen::Index x = 0; x < p.rows(); ++x) {
        const Scalar rate = -q(x, x);
        if (!(rate > 0)) throw AbsorbingStateError("state " + std::to_string(x) + " is absorbing");
        p.row(x) /= rate;
        p(x, x) = 0;
    }
    return p;
}

template <typename Scalar>
auto embedded_matrix(const ExplicitChain<Scalar>& chain) {
    return embedded_matrix(chain.generator());
}

}  // namespace parrep
