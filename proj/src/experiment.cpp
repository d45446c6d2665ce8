#include "parrep/experiment.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace parrep {

namespace {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FileError(path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw FileError(path.string());
    return buf.str();
}

std::string state_text(const std::vector<Count>& x) {
    std::string s;
    for (auto c : x) s += (s.empty() ? "" : " ") + std::to_string(c);
    return s;
}

Dephasing to_engine(DephasingKind d) {
    return d == DephasingKind::fleming_viot ? Dephasing::fleming_viot : Dephasing::rejection;
}

void fill_totals(RunReport& rep, const ParRepAccumulator& acc, std::size_t batches) {
    rep.clock = acc.clock;
    rep.steps = acc.steps;
    rep.rate_integral = acc.rate_integral;
    rep.virtual_cost = acc.virtual_cost;
    rep.events = acc.events;
    rep.cycles = acc.cycles;
    std::vector<double> den;
    den.reserve(acc.cycles.size());
    for (const auto& c : acc.cycles) den.push_back(c.clock);
    for (std::size_t k = 0; k < acc.F.size(); ++k) {
        std::vector<double> num;
        num.reserve(acc.cycles.size());
        for (const auto& c : acc.cycles) num.push_back(c.contribution[k]);
        rep.estimates.push_back(batch_means(num, den, batches));
    }
}

}  // namespace

std::string stable_hash(std::string_view text) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

Experiment make_experiment(ExperimentConfig config, ReactionNetwork network) {
    if (config.initial_state.size() != network.species_count())
        throw InputError("initial_state has " + std::to_string(config.initial_state.size()) + " entries, network has " +
                         std::to_string(network.species_count()) + " species");
    for (const auto& o : config.observables) resolve_observable(o.expr, network);
    for (const auto& o : config.slow_observables) resolve_observable(o.expr, network);
    auto text = serialize_network(network);
    return {std::move(config), std::move(network), std::move(text)};
}

Experiment load_experiment(const std::filesystem::path& config_path) {
    auto in_file = [](const std::filesystem::path& p, auto&& parse) {
        const auto text = read_file(p);
        try {
            return parse(text);
        } catch (const ParseError& e) {
            throw ParseError(0, p.string() + ": " + e.what());
        }
    };
    auto cfg = in_file(config_path, [](const std::string& t) { return parse_experiment(t); });
    const auto net_path = config_path.parent_path() / cfg.network;
    auto net = in_file(net_path, [](const std::string& t) { return parse_network(t); });
    return make_experiment(std::move(cfg), std::move(net));
}

RunReport run_experiment(const Experiment& exp, std::size_t workers) {
    const auto& cfg = exp.config;
    RunReport rep;
    rep.model_id = stable_hash(exp.network_text + "|" + state_text(cfg.initial_state));
    rep.config_hash = stable_hash(serialize_experiment(cfg) + exp.network_text);
    rep.algorithm = cfg.algorithm;
    rep.seed = cfg.master_seed;
    rep.replicas = cfg.replicas;

    NetworkDynamics dyn(exp.network);
    std::vector<Observable<PopulationState>> obs;
    for (const auto& o : cfg.observables) {
        rep.names.push_back(o.name);
        obs.push_back(make_observable(resolve_observable(o.expr, exp.network)));
    }
    const PopulationState x0{cfg.initial_state};
    const RngStream root(cfg.master_seed, 0);
    WorkerPool pool(workers);
    ParRepAccumulator acc(obs.size());

    if (cfg.algorithm == AlgorithmKind::ssa) {
        auto with_rate = obs;
        with_rate.push_back([&dyn](const PopulationState& x) { return dyn.total_rate(x); });
        RngStream rng = root.child(0);
        const auto [windows, last] = run_serial_slices(dyn, x0, std::span<const Observable<PopulationState>>(with_rate),
                                                       *cfg.horizon_time, cfg.batches, rng);
        for (std::size_t i = 0; i < windows.size(); ++i) {
            const auto& w = windows[i];
            CycleRecord rec;
            rec.cycle = i;
            rec.decorrelation_time = w.elapsed_time;
            rec.decorrelation_steps = w.step_count;
            rec.contribution.assign(w.time_integral.begin(), w.time_integral.end() - 1);
            rec.rate_integral = w.time_integral.back();
            rec.clock = w.elapsed_time;
            rec.steps = static_cast<double>(w.step_count);
            rec.events = w.step_count;
            acc.add(std::move(rec));
        }
        fill_totals(rep, acc, cfg.batches);
        return rep;
    }

    std::vector<ObservableSpec> slow;
    for (const auto& o : cfg.slow_observables) slow.push_back(resolve_observable(o.expr, exp.network));
    const auto labeler = slow_observable_labeler(std::move(slow));
    ParRepSettings s;
    s.replicas = cfg.replicas;
    if (cfg.t_c) s.t_c = *cfg.t_c;
    if (cfg.t_p) s.t_p = *cfg.t_p;
    if (cfg.n_c) s.n_c = *cfg.n_c;
    if (cfg.n_p) s.n_p = *cfg.n_p;
    s.dephasing = to_engine(cfg.dephasing);
    if (cfg.horizon_time) s.time_horizon = *cfg.horizon_time;
    if (cfg.horizon_steps) s.step_horizon = *cfg.horizon_steps;
    const std::span<const Observable<PopulationState>> view(obs);
    const auto run = cfg.algorithm == AlgorithmKind::ctmc_parrep
                         ? run_ctmc_parrep(dyn, labeler, view, x0, s, root, pool)
                         : run_embedded_parrep(dyn, labeler, view, x0, s, root, pool);
    fill_totals(rep, run.accumulator, cfg.batches);
    return rep;
}

double virtual_speedup(const RunReport& parrep, const RunReport& serial) {
    if (parrep.model_id != serial.model_id) throw InputError("speedup needs two runs of the same model");
    if (!(serial.rate_integral > 0) || parrep.virtual_cost == 0)
        throw InputError("speedup needs non-empty runs");
    return static_cast<double>(serial.events) * (parrep.rate_integral / serial.rate_integral) /
           static_cast<double>(parrep.virtual_cost);
}

SweepResult run_sweep(const Experiment& exp, const SweepSpec& spec, std::size_t workers) {
    const auto& base = exp.config;
    if (base.algorithm == AlgorithmKind::ssa) throw InputError("sweeps need a ParRep algorithm");
    if (!base.horizon_time) throw InputError("sweeps need horizon_time for the SSA reference run");

    SweepResult out;
    auto serial_cfg = base;
    serial_cfg.algorithm = AlgorithmKind::ssa;
    serial_cfg.replicas = 1;
    serial_cfg.dephasing = DephasingKind::rejection;
    out.serial = run_experiment(make_experiment(serial_cfg, exp.network), workers);

    const auto replicas = spec.replicas.empty() ? std::vector<std::uint64_t>{base.replicas} : spec.replicas;
    const auto dephasing = spec.dephasing.empty() ? std::vector<DephasingKind>{base.dephasing} : spec.dephasing;
    std::vector<std::optional<double>> thresholds;
    for (double t : spec.thresholds) thresholds.emplace_back(t);
    if (thresholds.empty()) thresholds.emplace_back(std::nullopt);

    for (auto th : thresholds) {
        for (auto d : dephasing) {
            for (auto r : replicas) {
                auto cfg = base;
                cfg.replicas = r;
                cfg.dephasing = d;
                if (th) {
                    if (cfg.algorithm == AlgorithmKind::ctmc_parrep) {
                        cfg.t_c = cfg.t_p = *th;
                    } else {
                        if (*th < 0 || *th != static_cast<double>(static_cast<std::uint64_t>(*th)))
                            throw InputError("embedded thresholds must be non-negative integers");
                        cfg.n_c = cfg.n_p = static_cast<std::uint64_t>(*th);
                    }
                }
                // the config rules apply to every sweep point
                cfg = parse_experiment(serialize_experiment(cfg));
                SweepPoint p;
                p.replicas = r;
                p.threshold = th;
                p.dephasing = d;
                p.report = run_experiment(make_experiment(cfg, exp.network), workers);
                p.speedup = virtual_speedup(p.report, out.serial);
                out.points.push_back(std::move(p));
            }
        }
    }
    return out;
}

}  // namespace parrep
