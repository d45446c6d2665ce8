// parrep: run, sweep and validate ParRep experiments.

#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "parrep/experiment.hpp"
#include "parrep/report.hpp"
#include "parrep/validate.hpp"

using namespace parrep;

namespace {

constexpr int exit_failure = 1;
constexpr int exit_input = 2;

struct Overrides {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> replicas;
    std::size_t workers = 1;
    std::string out;
};

Experiment load(const Overrides& o) {
    auto exp = load_experiment(o.config);
    if (o.seed) exp.config.master_seed = *o.seed;
    if (o.replicas) exp.config.replicas = *o.replicas;
    // overrides go through the same validation as the file
    exp.config = parse_experiment(serialize_experiment(exp.config));
    return exp;
}

std::filesystem::path out_dir(const Overrides& o, const Experiment& exp) {
    if (!o.out.empty()) return o.out;
    return std::filesystem::path(o.config).parent_path() / exp.config.output;
}

DephasingKind parse_dephasing(const std::string& s) {
    if (s == "rejection") return DephasingKind::rejection;
    if (s == "fleming-viot") return DephasingKind::fleming_viot;
    throw InputError("unknown dephasing '" + s + "'");
}

int cmd_run(const Overrides& o) {
    const auto exp = load(o);
    const auto report = run_experiment(exp, o.workers);
    const auto dir = out_dir(o, exp);
    write_report(dir, report);
    write_summary_csv(std::cout, report);
    std::cerr << "wrote " << (dir / "summary.csv").string() << " and " << (dir / "cycles.csv").string() << "\n";
    return 0;
}

int cmd_sweep(const Overrides& o, const std::vector<std::uint64_t>& replicas, const std::vector<double>& thresholds,
              const std::vector<std::string>& dephasing) {
    const auto exp = load(o);
    SweepSpec spec{replicas, thresholds, {}};
    for (const auto& d : dephasing) spec.dephasing.push_back(parse_dephasing(d));
    const auto sweep = run_sweep(exp, spec, o.workers);
    const auto dir = out_dir(o, exp);
    std::filesystem::create_directories(dir);
    std::ofstream f(dir / "sweep.csv", std::ios::binary | std::ios::trunc);
    if (!f) throw FileError((dir / "sweep.csv").string());
    write_sweep_csv(f, sweep);
    write_sweep_csv(std::cout, sweep);
    return 0;
}

int cmd_validate(const ValidateOptions& opt) {
    const auto checks = run_validation(opt);
    print_checks(std::cout, checks);
    const bool ok = all_passed(checks);
    std::cout << (ok ? "all checks passed" : "some checks failed") << "\n";
    return ok ? 0 : exit_failure;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Parallel replica simulation of metastable reaction networks"};
    app.require_subcommand(1);

    Overrides run_o, sweep_o;
    auto add_common = [](CLI::App* sub, Overrides& o) {
        sub->add_option("--config", o.config, "experiment file")->required();
        sub->add_option("--seed", o.seed, "master seed override");
        sub->add_option("--workers", o.workers, "worker threads; results do not depend on it")->check(CLI::PositiveNumber);
        sub->add_option("--out", o.out, "output directory (default: the config's output key)");
    };

    auto* run = app.add_subcommand("run", "run one experiment, write summary.csv and cycles.csv");
    add_common(run, run_o);
    run->add_option("--replicas", run_o.replicas, "replica count override")->check(CLI::PositiveNumber);

    auto* sweep = app.add_subcommand("sweep", "run a grid of replica counts, thresholds and dephasing methods");
    add_common(sweep, sweep_o);
    std::vector<std::uint64_t> sweep_replicas;
    std::vector<double> sweep_thresholds;
    std::vector<std::string> sweep_dephasing;
    sweep->add_option("--replicas", sweep_replicas, "replica counts");
    sweep->add_option("--thresholds", sweep_thresholds, "t_c = t_p (continuous) or n_c = n_p (embedded) values");
    sweep->add_option("--dephasing", sweep_dephasing, "rejection and/or fleming-viot");

    ValidateOptions vopt;
    auto* validate = app.add_subcommand("validate", "run the statistical property suite");
    validate->add_flag("--quick", vopt.quick, "smaller samples and wider thresholds");
    validate->add_flag("--fault", vopt.fault, "perturb the oracle's sigma_1 by 10% (the suite must fail)");
    validate->add_option("--seed", vopt.seed, "suite seed");
    validate->add_option("--workers", vopt.workers, "worker threads")->check(CLI::PositiveNumber);

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(run_o);
        if (sweep->parsed()) return cmd_sweep(sweep_o, sweep_replicas, sweep_thresholds, sweep_dephasing);
        return cmd_validate(vopt);
    } catch (const FileError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_input;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_input;
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_input;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_failure;
    }
}
