#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "parrep/experiment.hpp"
#include "parrep/report.hpp"
#include "parrep/validate.hpp"

using namespace parrep;

namespace {

const std::filesystem::path data_dir = PARREP_DATA_DIR;

Experiment short_run(const std::string& file, double horizon) {
    auto exp = load_experiment(data_dir / file);
    exp.config.horizon_time = horizon;
    return exp;
}

std::string csv(const RunReport& r) {
    std::ostringstream s;
    write_summary_csv(s, r);
    write_cycles_csv(s, r);
    return s.str();
}

std::vector<std::string> data_rows(const std::string& text) {
    std::vector<std::string> rows;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);)
        if (!line.empty() && line[0] != '#') rows.push_back(line);
    return rows;
}

struct Command {
    int status;
    std::string output;
};

Command shell(const std::string& cmd) {
    Command c{0, {}};
    FILE* p = popen((cmd + " 2>&1").c_str(), "r");
    REQUIRE(p);
    std::array<char, 4096> buf;
    while (auto n = std::fread(buf.data(), 1, buf.size(), p)) c.output.append(buf.data(), n);
    const int raw = pclose(p);
    c.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    return c;
}

}  // namespace

TEST_CASE("experiment files load with their networks") {
    const auto exp = load_experiment(data_dir / "table1_embedded.cfg");
    CHECK(exp.config.algorithm == AlgorithmKind::embedded_parrep);
    CHECK(exp.network.species_count() == 3);
    CHECK(exp.config.observables.size() == 3);
    const auto t2 = load_experiment(data_dir / "table2_fv.cfg");
    CHECK(t2.config.dephasing == DephasingKind::fleming_viot);
    CHECK(t2.network.species_count() == 4);

    try {
        load_experiment(data_dir / "no_such.cfg");
        FAIL("expected a file error");
    } catch (const FileError& e) {
        CHECK(std::string(e.what()).find("no_such.cfg") != std::string::npos);
    }
}

TEST_CASE("summary estimates equal the unbatched ratio") {
    for (const char* file : {"table1_embedded.cfg", "table1_ctmc.cfg", "table1_ssa.cfg"}) {
        const auto r = run_experiment(short_run(file, 200));
        REQUIRE(r.names.size() == 3);
        std::vector<double> F(3, 0.0);
        double clock = 0;
        for (const auto& c : r.cycles) {
            for (std::size_t k = 0; k < 3; ++k) F[k] += c.contribution[k];
            clock += c.clock;
        }
        CHECK(clock == r.clock);
        for (std::size_t k = 0; k < 3; ++k) CHECK(r.estimates[k].estimate == F[k] / clock);
        CHECK(r.clock >= 200);
        CHECK(r.virtual_cost > 0);
    }
}

TEST_CASE("CSV output is byte-stable and independent of the worker count") {
    for (const char* file : {"table1_embedded.cfg", "table1_ctmc.cfg"}) {
        const auto exp = short_run(file, 100);
        const auto a = csv(run_experiment(exp, 1));
        const auto b = csv(run_experiment(exp, 1));
        const auto c = csv(run_experiment(exp, 3));
        CHECK(a == b);
        CHECK(a == c);
    }
    auto fv = load_experiment(data_dir / "table2_fv.cfg");
    fv.config.horizon_time = 2;
    CHECK(csv(run_experiment(fv, 1)) == csv(run_experiment(fv, 4)));
}

TEST_CASE("summary CSV layout") {
    const auto r = run_experiment(short_run("table1_embedded.cfg", 50));
    std::ostringstream s;
    write_summary_csv(s, r);
    const auto text = s.str();
    CHECK(text.find("# seed=42\n") != std::string::npos);
    CHECK(text.find("# config_hash=" + r.config_hash) != std::string::npos);
    CHECK(text.find("# version=") != std::string::npos);
    const auto rows = data_rows(text);
    REQUIRE(rows.size() == 4);
    CHECK(rows[0] == "observable,estimate,std_error,batches,batch_size,virtual_cost");
    CHECK(rows[1].rfind("f1,", 0) == 0);
    CHECK(rows[3].rfind("f3,", 0) == 0);

    std::ostringstream cyc;
    write_cycles_csv(cyc, r);
    const auto lines = data_rows(cyc.str());
    CHECK(lines.size() == r.cycles.size() + 1);
    CHECK(lines[0].find(",F_f1,F_f2,F_f3") != std::string::npos);
}

TEST_CASE("numbers round-trip through the CSV format") {
    for (double v : {0.1, 20.001, 1e-300, 123456789.123, -2.5})
        CHECK(std::stod(format_number(v)) == v);
    CHECK(format_number(std::nan("")) == "nan");
}

TEST_CASE("virtual speedup") {
    auto exp = short_run("table1_embedded.cfg", 1000);
    auto serial_exp = exp;
    serial_exp.config.algorithm = AlgorithmKind::ssa;
    const auto serial = run_experiment(serial_exp);

    // one replica only adds the dephasing overhead
    exp.config.replicas = 1;
    exp.config.n_p = 100;
    const auto one = run_experiment(exp);
    CHECK(virtual_speedup(one, serial) <= 1);

    exp.config.replicas = 10;
    exp.config.n_p = 15;
    const auto ten = run_experiment(exp);
    CHECK(virtual_speedup(ten, serial) > 2);

    auto other = load_experiment(data_dir / "table2_fv.cfg");
    other.config.horizon_time = 1;
    CHECK_THROWS_AS(virtual_speedup(run_experiment(other), serial), InputError);
}

TEST_CASE("sweeps") {
    const auto exp = short_run("table1_embedded.cfg", 200);
    const auto single = run_sweep(exp, {});
    REQUIRE(single.points.size() == 1);
    CHECK(csv(single.points[0].report) == csv(run_experiment(exp)));

    const auto grid = run_sweep(exp, {{2, 5}, {5, 15}, {DephasingKind::rejection, DephasingKind::fleming_viot}});
    CHECK(grid.points.size() == 8);
    for (const auto& p : grid.points) CHECK(p.speedup > 0);
    std::ostringstream s;
    write_sweep_csv(s, grid);
    CHECK(data_rows(s.str()).size() == 9);

    CHECK_THROWS_AS(run_sweep(exp, {{1}, {}, {DephasingKind::fleming_viot}}), ParseError);
    CHECK_THROWS_AS(run_sweep(exp, {{}, {2.5}, {}}), InputError);
}

TEST_CASE("validation suite: quick mode passes, an injected fault fails") {
    ValidateOptions opt;
    opt.quick = true;
    const auto ok = run_validation(opt);
    CHECK(all_passed(ok));
    opt.fault = true;
    const auto bad = run_validation(opt);
    CHECK_FALSE(all_passed(bad));
    bool named = false;
    for (const auto& c : bad)
        if (!c.passed && c.name.find("sigma_1") != std::string::npos) named = true;
    CHECK(named);
}

TEST_CASE("command line") {
    const std::string cli = PARREP_CLI;
    const auto missing = shell(cli + " run --config /nonexistent/x.cfg");
    CHECK(missing.status == 2);
    CHECK(missing.output.find("/nonexistent/x.cfg") != std::string::npos);

    const auto out = std::filesystem::temp_directory_path() / "parrep_cli_test";
    std::filesystem::remove_all(out);
    const auto cfg = out / "t.cfg";
    std::filesystem::create_directories(out);
    {
        std::ifstream in(data_dir / "table1_embedded.cfg");
        std::ofstream o(cfg);
        for (std::string line; std::getline(in, line);) {
            if (line.rfind("network", 0) == 0) line = "network = " + (data_dir / "table1.net").string();
            if (line.rfind("horizon_time", 0) == 0) line = "horizon_time = 100";
            o << line << "\n";
        }
    }
    const auto run = shell(cli + " run --config " + cfg.string() + " --replicas 1 --seed 7 --out " + (out / "r").string());
    CHECK(run.status == 0);
    CHECK(std::filesystem::exists(out / "r" / "summary.csv"));
    CHECK(std::filesystem::exists(out / "r" / "cycles.csv"));
    CHECK(run.output.find("# seed=7") != std::string::npos);
    CHECK(run.output.find("# replicas=1") != std::string::npos);

    const auto sweep = shell(cli + " sweep --config " + cfg.string() + " --replicas 2 4 --out " + (out / "s").string());
    CHECK(sweep.status == 0);
    CHECK(std::filesystem::exists(out / "s" / "sweep.csv"));

    CHECK(shell(cli + " validate --quick").status == 0);
    const auto fault = shell(cli + " validate --quick --fault");
    CHECK(fault.status == 1);
    CHECK(fault.output.find("FAIL") != std::string::npos);
    std::filesystem::remove_all(out);
}
