#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "parrep/net_model.hpp"

namespace parrep {

/// Network file:
///
///     # comment
///     species A B C
///     0 -> A @ 0.1 slow
///     A -> B @ 100 fast
///     2 S2 + S3 -> 3 S4 @ 2
///
/// Stoichiometric coefficients are single digits 1..9 (written "2 S2" or
/// "2S2"); "0" is the empty complex; the flag defaults to slow.
ReactionNetwork parse_network(std::string_view text, std::vector<std::string>* warnings = nullptr);
std::string serialize_network(const ReactionNetwork& net);

/// Linear observable written over species names, e.g. "A + B", "2*A - 0.5*C",
/// "C" or "1". Resolved against a network by resolve_observable.
struct ObservableExpr {
    std::vector<std::pair<std::string, double>> terms;  // species name, weight
    double constant = 0;
    bool bare = false;  // a single species name with no coefficient

    bool operator==(const ObservableExpr&) const = default;
};

ObservableExpr parse_observable(std::string_view text);
std::string format_observable(const ObservableExpr& f);
ObservableSpec resolve_observable(const ObservableExpr& f, const ReactionNetwork& net);

enum class AlgorithmKind { ssa, ctmc_parrep, embedded_parrep };
enum class DephasingKind { rejection, fleming_viot };

std::string to_string(AlgorithmKind a);
std::string to_string(DephasingKind d);

struct NamedObservable {
    std::string name;
    ObservableExpr expr;

    bool operator==(const NamedObservable&) const = default;
};

/// Experiment file: one "key = value" per line, '#' comments.
///
///     network = table1.net
///     algorithm = embedded-parrep
///     replicas = 10
///     n_c = 15
///     n_p = 15
///     initial_state = 5 10 10
///     observable.f1 = A + B
///     slow.f1 = A + B
///     slow.f2 = C
///     horizon_time = 1e4
///     master_seed = 42
struct ExperimentConfig {
    std::string network;
    AlgorithmKind algorithm = AlgorithmKind::ssa;
    std::uint64_t replicas = 1;
    std::optional<double> t_c, t_p;
    std::optional<std::uint64_t> n_c, n_p;
    DephasingKind dephasing = DephasingKind::rejection;
    std::vector<Count> initial_state;
    std::vector<NamedObservable> observables;
    std::vector<NamedObservable> slow_observables;  // metastable-set labels
    std::optional<double> horizon_time;
    std::optional<std::uint64_t> horizon_steps;
    std::uint64_t master_seed = 1;
    std::uint64_t batches = 20;
    std::string output = "out";

    bool operator==(const ExperimentConfig&) const = default;
};

ExperimentConfig parse_experiment(std::string_view text);
std::string serialize_experiment(const ExperimentConfig& cfg);

}  // namespace parrep
