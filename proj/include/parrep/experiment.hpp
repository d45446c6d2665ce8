#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "parrep/net_parser.hpp"
#include "parrep/parrep.hpp"
#include "parrep/stats.hpp"

namespace parrep {

/// A parsed experiment together with its network.
struct Experiment {
    ExperimentConfig config;
    ReactionNetwork network;
    std::string network_text;  // canonical serialization, used for the model id
};

/// Reads a config file; the network path is taken relative to the config's directory.
Experiment load_experiment(const std::filesystem::path& config_path);
Experiment make_experiment(ExperimentConfig config, ReactionNetwork network);

struct RunReport {
    std::string model_id;     // network + initial state
    std::string config_hash;
    AlgorithmKind algorithm = AlgorithmKind::ssa;
    std::uint64_t seed = 0;
    std::uint64_t replicas = 1;
    std::vector<std::string> names;
    std::vector<BatchMeansCI> estimates;
    double clock = 0;                 // T_sim, or F(1)_sim for the embedded engine
    std::uint64_t steps = 0;          // N_sim (embedded) or SSA jumps
    double rate_integral = 0;         // integral of q: serial-equivalent event count
    std::uint64_t virtual_cost = 0;   // synchronous wall-cost in events
    std::uint64_t events = 0;         // all jumps simulated
    std::vector<CycleRecord> cycles;  // ParRep cycles, or equal time slices for SSA
};

/// FNV-1a, stable across platforms; printed as 16 hex digits.
std::string stable_hash(std::string_view text);

RunReport run_experiment(const Experiment& exp, std::size_t workers = 1);

/// Serial-equivalent events per synchronous event, normalised to the serial
/// run's event rate: serial.events * (parrep.rate_integral / serial.rate_integral) / parrep.virtual_cost.
double virtual_speedup(const RunReport& parrep, const RunReport& serial);

struct SweepSpec {
    std::vector<std::uint64_t> replicas;   // empty: the config's value
    std::vector<double> thresholds;        // sets t_c = t_p or n_c = n_p; empty: the config's values
    std::vector<DephasingKind> dephasing;  // empty: the config's value
};

struct SweepPoint {
    std::uint64_t replicas = 1;
    std::optional<double> threshold;
    DephasingKind dephasing = DephasingKind::rejection;
    RunReport report;
    double speedup = 0;
};

struct SweepResult {
    RunReport serial;
    std::vector<SweepPoint> points;
};

/// Runs every combination of the sweep lists plus one SSA reference run.
SweepResult run_sweep(const Experiment& exp, const SweepSpec& spec, std::size_t workers = 1);

}  // namespace parrep
