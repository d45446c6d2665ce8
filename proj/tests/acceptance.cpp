// Acceptance run: one PASS/FAIL line per criterion.

#include <chrono>
#include <cmath>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "parrep/experiment.hpp"
#include "parrep/report.hpp"
#include "parrep/validate.hpp"

using namespace parrep;

namespace {

const std::filesystem::path data_dir = PARREP_DATA_DIR;

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok) pass = false;
        detail << (ok ? "" : "[failed] ") << what << "; ";
    }
};

class Timer {
  public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

  private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

int failures = 0;

void print(int id, const std::string& title, Outcome& o, double seconds) {
    if (!o.pass) ++failures;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << " (" << title << "): " << o.detail.str()
              << std::fixed << std::setprecision(1) << seconds << " s" << std::defaultfloat << std::endl;
}

std::string fmt(double v, int digits = 5) {
    std::ostringstream s;
    s << std::setprecision(digits) << v;
    return s.str();
}

std::string csv(const RunReport& r) {
    std::ostringstream s;
    write_summary_csv(s, r);
    write_cycles_csv(s, r);
    return s.str();
}

Experiment load(const std::string& file) { return load_experiment(data_dir / file); }

Outcome from_checks(const std::vector<CheckResult>& checks) {
    Outcome o;
    for (const auto& c : checks) o.require(c.passed, c.name + " " + fmt(c.statistic, 4) + " vs " + fmt(c.threshold, 4));
    return o;
}

RunReport run(Experiment exp, std::optional<std::uint64_t> replicas = {}, std::size_t workers = 1) {
    if (replicas) exp.config.replicas = *replicas;
    return run_experiment(exp, workers);
}

}  // namespace

int main() {
    const double table1_exact[] = {20.001, 10, 10.001};
    ValidateOptions vopt;

    // 1
    Timer t1;
    const auto table1_embedded = load("table1_embedded.cfg");
    const auto r1 = run(table1_embedded);
    {
        Outcome o;
        for (std::size_t k = 0; k < 3; ++k) {
            const auto& e = r1.estimates[k];
            const double err = std::abs(e.estimate - table1_exact[k]);
            o.require(err <= 3 * e.std_error, r1.names[k] + " = " + fmt(e.estimate) + " +- " + fmt(e.std_error, 3) +
                                                  " within 3 se of " + fmt(table1_exact[k]));
            o.require(err <= 0.02 * table1_exact[k], r1.names[k] + " relative error " + fmt(err / table1_exact[k], 3) +
                                                         " <= 0.02");
        }
        o.require(t1.seconds() < 120, "runtime < 120 s");
        print(1, "embedded ParRep stationary averages, linear network", o, t1.seconds());
    }

    // 2
    Timer t2;
    const auto table1_ctmc = load("table1_ctmc.cfg");
    const auto c10 = run(table1_ctmc);
    const auto c1 = run(table1_ctmc, 1);
    {
        Outcome o;
        for (std::size_t k = 0; k < 2; ++k) {
            for (const auto* r : {&c1, &c10}) {
                const auto& e = r->estimates[k];
                o.require(std::abs(e.estimate - table1_exact[k]) <= 3 * e.std_error,
                          "R=" + std::to_string(r->replicas) + " " + r->names[k] + " = " + fmt(e.estimate) + " +- " +
                              fmt(e.std_error, 3));
            }
            const auto& a = c1.estimates[k];
            const auto& b = c10.estimates[k];
            o.require(std::abs(a.estimate - b.estimate) <= 3 * std::hypot(a.std_error, b.std_error),
                      r1.names[k] + " R=1 vs R=10 within joint 3 se");
        }
        print(2, "CTMC ParRep consistency, R in {1, 10}", o, t2.seconds());
    }

    // 3
    {
        Timer t;
        auto o = from_checks(check_eigen_fixtures(vopt));
        o.require(t.seconds() < 1, "runtime < 1 s");
        print(3, "QSD eigenvalues and verdicts of the 4x4 examples", o, t.seconds());
    }
    // 4
    {
        Timer t;
        auto o = from_checks(check_exit_laws(vopt));
        o.require(t.seconds() < 30, "runtime < 30 s");
        print(4, "exit laws from the QSD", o, t.seconds());
    }
    // 5
    {
        Timer t;
        auto o = from_checks(check_parallel_identities(vopt));
        print(5, "parallel stage distributional identities", o, t.seconds());
    }
    // 6
    {
        Timer t;
        auto o = from_checks(check_unbiasedness(vopt));
        print(6, "unbiased parallel contributions", o, t.seconds());
    }
    // 7
    {
        Timer t;
        auto o = from_checks(check_error_decay(vopt));
        print(7, "one-cycle error decay", o, t.seconds());
    }

    // 8
    {
        Timer t;
        const auto serial = run(load("table1_ssa.cfg"));
        Outcome o;
        double previous = 0;
        for (std::uint64_t r : {10, 50, 100}) {
            const auto emb = r == 10 ? r1 : run(table1_embedded, r);
            const auto ctmc = r == 10 ? c10 : run(table1_ctmc, r);
            const double se = virtual_speedup(emb, serial);
            const double sc = virtual_speedup(ctmc, serial);
            o.require(se >= sc, "R=" + std::to_string(r) + " embedded " + fmt(se, 4) + " >= CTMC " + fmt(sc, 4));
            if (r == 10) o.require(se >= 4, "embedded R=10 speedup >= 4");
            if (r == 100) {
                o.require(se >= 15, "embedded R=100 speedup >= 15");
                o.require(se < 100, "sublinear at R=100");
            }
            o.require(se > previous, "embedded speedup increases with R");
            previous = se;
        }
        print(8, "virtual-clock speedup trend, linear network", o, t.seconds());
    }

    // 9
    Timer t9;
    auto fv = load("table2_fv.cfg");
    auto rej = load("table2_rejection.cfg");
    const double table2_horizon = 1000;
    fv.config.horizon_time = rej.config.horizon_time = table2_horizon;
    std::optional<RunReport> fv60;
    {
        Outcome o;
        double cost[2][2];  // [threshold][fv, rejection]
        const std::uint64_t thresholds[] = {20, 60};
        for (int i = 0; i < 2; ++i) {
            for (int j = 0; j < 2; ++j) {
                auto exp = j == 0 ? fv : rej;
                exp.config.n_c = exp.config.n_p = thresholds[i];
                const auto r = run(exp);
                cost[i][j] = static_cast<double>(r.virtual_cost) / r.clock;
                if (i == 1 && j == 0) fv60 = r;
            }
        }
        o.require(cost[1][0] <= cost[1][1],
                  "n=60: FV cost per unit time " + fmt(cost[1][0]) + " <= rejection " + fmt(cost[1][1]));
        const double gap = std::abs(cost[0][0] - cost[0][1]) / cost[0][1];
        o.require(gap <= 0.10, "n=20: FV " + fmt(cost[0][0]) + " vs rejection " + fmt(cost[0][1]) + ", relative gap " +
                                   fmt(gap, 3) + " <= 0.10");
        print(9, "dephasing cost comparison, nonlinear network, R = 100", o, t9.seconds());
    }

    // 10
    {
        Timer t;
        Outcome o;
        o.require(csv(run(table1_embedded, {}, 4)) == csv(r1), "embedded linear network, 1 vs 4 workers");
        o.require(csv(run(table1_ctmc, {}, 4)) == csv(c10), "CTMC linear network, 1 vs 4 workers");
        auto exp = fv;
        exp.config.n_c = exp.config.n_p = 60;
        o.require(csv(run(exp, {}, 4)) == csv(*fv60), "Fleming-Viot nonlinear network, 1 vs 4 workers");
        print(10, "byte-identical CSV across worker counts", o, t.seconds());
    }

    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
    return failures == 0 ? 0 : 1;
}
