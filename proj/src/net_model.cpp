#include "parrep/net_model.hpp"

#include <algorithm>

namespace parrep {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void validate_reaction(const Reaction& r, std::size_t species, std::size_t j) {
    const auto where = "reaction " + std::to_string(j + 1) + ": ";
    if (r.state_change.size() != species)
        throw InputError(where + "state change has wrong dimension");
    const double c = rate_constant(r.propensity);
    if (!(c >= 0)) throw InputError(where + "rate constant must be non-negative");
    std::visit(overloaded{
                   [](const ConstantRate&) {},
                   [&](const LinearRate& p) {
                       if (p.species >= species) throw InputError(where + "species index out of range");
                   },
                   [&](const MassActionRate& p) {
                       if (p.reactants.empty()) throw InputError(where + "mass action needs reactants");
                       for (const auto& t : p.reactants) {
                           if (t.species >= species)
                               throw InputError(where + "species index out of range");
                           if (t.multiplicity < 1)
                               throw InputError(where + "reactant multiplicity must be >= 1");
                       }
                   },
               },
               r.propensity);
}

}  // namespace

double rate_constant(const Propensity& p) {
    return std::visit([](const auto& v) { return v.rate; }, p);
}

ReactionNetwork::ReactionNetwork(std::vector<std::string> species_names,
                                 std::vector<Reaction> reactions, std::vector<bool> slow_flags)
    : species_(std::move(species_names)), reactions_(std::move(reactions)), slow_(std::move(slow_flags)) {
    if (species_.empty()) throw InputError("network needs at least one species");
    if (reactions_.empty()) throw InputError("network needs at least one reaction");
    if (slow_.size() != reactions_.size())
        throw InputError("slow_reaction_flags length must equal reaction count");
    for (std::size_t i = 0; i < species_.size(); ++i)
        for (std::size_t k = i + 1; k < species_.size(); ++k)
            if (species_[i] == species_[k]) throw InputError("duplicate species " + species_[i]);
    for (std::size_t j = 0; j < reactions_.size(); ++j) validate_reaction(reactions_[j], species_.size(), j);
}

ReactionNetwork::ReactionNetwork(std::vector<std::string> species_names, std::vector<Reaction> reactions)
    : ReactionNetwork(std::move(species_names), reactions, std::vector<bool>(reactions.size(), true)) {}

std::size_t ReactionNetwork::species_index(const std::string& name) const {
    auto it = std::find(species_.begin(), species_.end(), name);
    if (it == species_.end()) throw InputError("undeclared species '" + name + "'");
    return static_cast<std::size_t>(it - species_.begin());
}

void ReactionNetwork::check_state(const PopulationState& x) const {
    if (x.size() != species_.size())
        throw InputError("state has " + std::to_string(x.size()) + " entries, network has " +
                         std::to_string(species_.size()) + " species");
    for (auto c : x.counts)
        if (c < 0) throw InputError("state has a negative count");
}

double propensity(const Reaction& r, const PopulationState& x) {
    return std::visit(overloaded{
                          [](const ConstantRate& p) { return p.rate; },
                          [&](const LinearRate& p) { return p.rate * static_cast<double>(x[p.species]); },
                          [&](const MassActionRate& p) {
                              double a = p.rate;
                              for (const auto& t : p.reactants) {
                                  const Count n = x[t.species];
                                  if (n < t.multiplicity) return 0.0;
                                  for (Count k = 0; k < t.multiplicity; ++k)
                                      a *= static_cast<double>(n - k);
                              }
                              return a;
                          },
                      },
                      r.propensity);
}

void propensities(const ReactionNetwork& net, const PopulationState& x, std::span<double> out) {
    if (x.size() != net.species_count()) net.check_state(x);
    if (out.size() != net.reaction_count()) throw InputError("propensity buffer has wrong size");
    const auto& rs = net.reactions();
    for (std::size_t j = 0; j < rs.size(); ++j) out[j] = propensity(rs[j], x);
}

std::vector<double> propensities(const ReactionNetwork& net, const PopulationState& x) {
    std::vector<double> out(net.reaction_count());
    propensities(net, x, out);
    return out;
}

double total_rate(const ReactionNetwork& net, const PopulationState& x) {
    if (x.size() != net.species_count()) net.check_state(x);
    double q = 0;
    for (const auto& r : net.reactions()) q += propensity(r, x);
    if (!(q > 0)) throw AbsorbingStateError("all propensities vanish: absorbing state");
    return q;
}

void apply_reaction_inplace(PopulationState& x, std::size_t j, const ReactionNetwork& net) {
    const auto& eta = net.reaction(j).state_change;
    if (x.size() != eta.size()) net.check_state(x);
    for (std::size_t i = 0; i < eta.size(); ++i) {
        Count next;
        if (__builtin_add_overflow(x[i], eta[i], &next))
            throw std::overflow_error("species count overflow");
        if (next < 0)
            throw std::logic_error("reaction " + std::to_string(j + 1) +
                                   " drives a count negative; its propensity should have been zero");
        x[i] = next;
    }
}

PopulationState apply_reaction(const PopulationState& x, std::size_t j, const ReactionNetwork& net) {
    PopulationState y = x;
    apply_reaction_inplace(y, j, net);
    return y;
}

double evaluate(const ObservableSpec& f, const PopulationState& x) {
    return std::visit(overloaded{
                          [&](const LinearCombination& g) {
                              double v = 0;
                              for (std::size_t i = 0; i < g.weights.size(); ++i)
                                  v += g.weights[i] * static_cast<double>(x[i]);
                              return v;
                          },
                          [&](const Coordinate& g) { return static_cast<double>(x[g.index]); },
                          [](const ConstantValue& g) { return g.value; },
                      },
                      f);
}

void check_observable(const ObservableSpec& f, std::size_t species_count) {
    if (const auto* g = std::get_if<LinearCombination>(&f); g && g->weights.size() != species_count)
        throw InputError("observable weights dimension must equal species count");
    if (const auto* g = std::get_if<Coordinate>(&f); g && g->index >= species_count)
        throw InputError("observable coordinate out of range");
}

}  // namespace parrep
