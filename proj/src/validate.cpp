#include "parrep/validate.hpp"

#include <cmath>
#include <iomanip>

#include "parrep/fixtures.hpp"
#include "parrep/parrep.hpp"
#include "parrep/qsd_oracle.hpp"
#include "parrep/stats.hpp"

namespace parrep {

namespace {

using Index = Eigen::Index;
using ChainObs = std::vector<Observable<Index>>;

struct Settings {
    std::size_t samples;
    std::size_t cycles;
    double alpha;
    double sigmas;
};

Settings settings(const ValidateOptions& opt) {
    return opt.quick ? Settings{2000, 20000, 0.001, 4} : Settings{10000, 100000, 0.01, 3};
}

/// Explicit chain on W = {0,1,2} with its oracle quantities. Not movable once
/// dynamics refer to it, so callers keep it in place.
struct Fixture {
    ExplicitChain<> chain;
    MetastableSet<double> set;
    QsdSolution<double> ctmc;
    QsdSolution<double> dtmc;

    Fixture(const Eigen::MatrixXd& q, const ValidateOptions& opt)
        : chain(q),
          set(make_metastable_set(chain, fixtures::example_set())),
          ctmc(qsd_ctmc(set)),
          dtmc(qsd_dtmc(set)) {
        if (opt.fault) dtmc.dominant *= 0.9;
    }
    Fixture(const Fixture&) = delete;

    Membership<Index> in_w() const {
        return [this](const Index& x) { return set.contains(x); };
    }
    double lambda1() const { return ctmc.dominant; }
    double sigma1() const { return dtmc.dominant; }
};

std::vector<Index> draw(const MetastableSet<double>& w, const Eigen::RowVectorXd& law, std::size_t n, RngStream& rng) {
    std::vector<Index> out;
    out.reserve(n);
    for (std::size_t r = 0; r < n; ++r) {
        double u = rng.uniform();
        Index k = 0;
        while (k + 1 < law.size() && u > law(k)) u -= law(k++);
        out.push_back(w.members[static_cast<std::size_t>(k)]);
    }
    return out;
}

CheckResult p_check(std::string name, const TestResult& t, double alpha) {
    return {std::move(name), t.p_value, alpha, "p >= threshold", t.passes(alpha)};
}

CheckResult z_check(std::string name, const MeanSE& m, double target, double sigmas) {
    const double z = std::abs(m.mean - target) / m.std_error;
    return {std::move(name), z, sigmas, "|mean - oracle| / se <= threshold", z <= sigmas};
}

double rel(double value, double reference) { return std::abs(value - reference) / std::abs(reference); }

}  // namespace

std::vector<CheckResult> check_eigen_fixtures(const ValidateOptions& opt) {
    const double eps = 1e-3;
    const Fixture a(fixtures::ctmc_metastable_generator(eps), opt);
    const Fixture b(fixtures::dtmc_metastable_generator(eps), opt);
    const double dev = std::max({rel(a.lambda1(), -eps / 2), rel(a.ctmc.subdominant, -0.5), rel(a.sigma1(), 0.81),
                                 rel(a.dtmc.subdominant, 0.5), rel(b.sigma1(), 1 - eps / 5),
                                 rel(b.dtmc.subdominant, std::sqrt(2.0) / 2), rel(b.lambda1(), -0.2),
                                 rel(b.ctmc.subdominant, -1.5 / eps)});
    const auto va = classify_metastability(a.ctmc, a.dtmc);
    const auto vb = classify_metastability(b.ctmc, b.dtmc);
    const double wrong = (va.ctmc ? 0 : 1) + (va.dtmc ? 1 : 0) + (vb.ctmc ? 1 : 0) + (vb.dtmc ? 0 : 1);
    return {{"QSD eigenvalues of the 4x4 examples", dev, 0.05, "max relative deviation <= threshold", dev <= 0.05},
            {"metastability verdicts of the 4x4 examples", wrong, 0, "mismatches <= threshold", wrong == 0}};
}

std::vector<CheckResult> check_exit_laws(const ValidateOptions& opt) {
    const auto s = settings(opt);
    const Fixture a(fixtures::ctmc_metastable_generator(), opt);
    const Fixture c(fixtures::three_exit_generator(), opt);
    ChainDynamics da(a.chain), dc(c.chain);
    WorkerPool pool(opt.workers);
    std::vector<CheckResult> out;

    RngStream rng(opt.seed, 100);
    std::vector<double> exit_times;
    std::vector<std::uint64_t> exit_steps;
    for (std::size_t i = 0; i < s.samples; ++i) {
        Index x = draw(a.set, a.ctmc.distribution, 1, rng)[0];
        double t = 0;
        while (a.set.contains(x)) t += ssa_step(da, x, rng).holding_time;
        exit_times.push_back(t);
        x = draw(a.set, a.dtmc.distribution, 1, rng)[0];
        std::uint64_t n = 0;
        while (a.set.contains(x)) {
            embedded_step(da, x, rng);
            ++n;
        }
        exit_steps.push_back(n);
    }
    const double l1 = a.lambda1();
    out.push_back(p_check("exit time from nu is Exp(-lambda_1) (KS)",
                          ks_test(exit_times, [l1](double t) { return 1 - std::exp(l1 * t); }), s.alpha));
    out.push_back(p_check("exit steps from mu are Geometric(1 - sigma_1) (chi2)",
                          chi2_geometric(exit_steps, 1 - a.sigma1()), s.alpha));

    // three exit states, so the exit-state law is not degenerate
    std::vector<double> ct, cn;
    std::vector<Index> cs, ds;
    for (std::size_t i = 0; i < s.samples; ++i) {
        Index x = draw(c.set, c.ctmc.distribution, 1, rng)[0];
        double t = 0;
        while (c.set.contains(x)) t += ssa_step(dc, x, rng).holding_time;
        ct.push_back(t);
        cs.push_back(x);
        x = draw(c.set, c.dtmc.distribution, 1, rng)[0];
        double n = 0;
        while (c.set.contains(x)) {
            embedded_step(dc, x, rng);
            ++n;
        }
        cn.push_back(n);
        ds.push_back(x);
    }
    auto independence = [](const std::vector<double>& times, const std::vector<Index>& states) {
        const auto bins = quantile_bins(times, 4);
        std::vector<std::vector<std::uint64_t>> table(3, std::vector<std::uint64_t>(4, 0));
        for (std::size_t i = 0; i < bins.size(); ++i) ++table[static_cast<std::size_t>(states[i] - 3)][bins[i]];
        return chi2_independence(table);
    };
    out.push_back(p_check("exit state independent of exit time (chi2)", independence(ct, cs), s.alpha));
    out.push_back(p_check("exit state independent of exit steps (chi2)", independence(cn, ds), s.alpha));

    std::vector<double> rt;
    const ChainObs none;
    for (std::size_t i = 0; i < s.samples; ++i) {
        const auto seeds = draw(a.set, a.ctmc.distribution, 4, rng);
        rt.push_back(parallel_stage_ctmc(da, a.in_w(), std::span<const Index>(seeds), std::span(none),
                                         RngStream(opt.seed, 101).child(i), pool)
                         .stage_time);
    }
    out.push_back(p_check("R T* matches T from nu, R = 4 (two-sample KS)", ks_test_two_sample(rt, exit_times), s.alpha));
    return out;
}

std::vector<CheckResult> check_parallel_identities(const ValidateOptions& opt) {
    const auto s = settings(opt);
    const Fixture a(fixtures::ctmc_metastable_generator(), opt);
    const Fixture c(fixtures::three_exit_generator(), opt);
    ChainDynamics da(a.chain), dc(c.chain);
    WorkerPool pool(opt.workers);
    const ChainObs none;
    std::vector<CheckResult> out;
    RngStream rng(opt.seed, 200);

    std::vector<std::uint64_t> stage;
    for (std::size_t i = 0; i < s.samples; ++i) {
        const auto seeds = draw(a.set, a.dtmc.distribution, 4, rng);
        stage.push_back(static_cast<std::uint64_t>(
            parallel_stage_embedded(da, a.in_w(), std::span<const Index>(seeds), std::span(none),
                                    RngStream(opt.seed, 201).child(i), pool)
                .stage_time));
    }
    out.push_back(p_check("R (N* - 1) + K is Geometric(1 - sigma_1), R = 4 (chi2)",
                          chi2_geometric(stage, 1 - a.sigma1()), s.alpha));

    std::vector<std::uint64_t> e1, e4, c1, c4;  // exit state labels 0..2
    std::vector<double> times;
    std::vector<Index> states;
    for (std::size_t i = 0; i < s.samples; ++i) {
        const auto one = draw(c.set, c.dtmc.distribution, 1, rng);
        const auto four = draw(c.set, c.dtmc.distribution, 4, rng);
        const auto p1 = parallel_stage_embedded(dc, c.in_w(), std::span<const Index>(one), std::span(none),
                                                RngStream(opt.seed, 202).child(i), pool);
        const auto p4 = parallel_stage_embedded(dc, c.in_w(), std::span<const Index>(four), std::span(none),
                                                RngStream(opt.seed, 203).child(i), pool);
        e1.push_back(static_cast<std::uint64_t>(p1.exit_state - 3));
        e4.push_back(static_cast<std::uint64_t>(p4.exit_state - 3));
        times.push_back(p4.stage_time);
        states.push_back(p4.exit_state);

        const auto n1 = draw(c.set, c.ctmc.distribution, 1, rng);
        const auto n4 = draw(c.set, c.ctmc.distribution, 4, rng);
        const auto q1 = parallel_stage_ctmc(dc, c.in_w(), std::span<const Index>(n1), std::span(none),
                                            RngStream(opt.seed, 204).child(i), pool);
        const auto q4 = parallel_stage_ctmc(dc, c.in_w(), std::span<const Index>(n4), std::span(none),
                                            RngStream(opt.seed, 205).child(i), pool);
        c1.push_back(static_cast<std::uint64_t>(q1.exit_state - 3));
        c4.push_back(static_cast<std::uint64_t>(q4.exit_state - 3));
    }
    out.push_back(p_check("embedded exit-state law equal for R = 1 and R = 4 (chi2)", chi2_homogeneity(e1, e4), s.alpha));
    const auto bins = quantile_bins(times, 4);
    std::vector<std::vector<std::uint64_t>> table(3, std::vector<std::uint64_t>(4, 0));
    for (std::size_t i = 0; i < bins.size(); ++i) ++table[static_cast<std::size_t>(states[i] - 3)][bins[i]];
    out.push_back(p_check("embedded exit state independent of R (N* - 1) + K, R = 4 (chi2)", chi2_independence(table),
                          s.alpha));
    out.push_back(p_check("CTMC exit-state law equal for R = 1 and R = 4 (chi2)", chi2_homogeneity(c1, c4), s.alpha));
    return out;
}

std::vector<CheckResult> check_unbiasedness(const ValidateOptions& opt) {
    const auto s = settings(opt);
    const Fixture a(fixtures::ctmc_metastable_generator(), opt);
    ChainDynamics da(a.chain);
    WorkerPool pool(opt.workers);
    const Index target_state = 2;
    const ChainObs obs{indicator(target_state)};
    const auto pos = a.set.position(target_state);
    const double ctmc_target = a.ctmc.distribution(pos) * expected_exit_time(a.set, a.ctmc.distribution);
    const double embedded_target =
        a.dtmc.distribution(pos) / a.set.rates(pos) * expected_exit_steps(a.set, a.dtmc.distribution);
    std::vector<CheckResult> out;
    RngStream rng(opt.seed, 300);
    for (std::size_t replicas : {1, 4}) {
        std::vector<double> c, e;
        for (std::size_t i = 0; i < s.samples; ++i) {
            const auto n = draw(a.set, a.ctmc.distribution, replicas, rng);
            const auto m = draw(a.set, a.dtmc.distribution, replicas, rng);
            c.push_back(parallel_stage_ctmc(da, a.in_w(), std::span<const Index>(n), std::span(obs),
                                            RngStream(opt.seed, 301 + replicas).child(i), pool)
                            .sums.observables[0]);
            e.push_back(parallel_stage_embedded(da, a.in_w(), std::span<const Index>(m), std::span(obs),
                                                RngStream(opt.seed, 311 + replicas).child(i), pool)
                            .sums.observables[0]);
        }
        const auto r = std::to_string(replicas);
        out.push_back(z_check("CTMC stage contribution equals nu(f) E[T], R = " + r, mean_se(c), ctmc_target, s.sigmas));
        out.push_back(z_check("embedded stage contribution equals mu(f/q) E[N], R = " + r, mean_se(e), embedded_target,
                              s.sigmas));
    }
    return out;
}

std::vector<CheckResult> check_error_decay(const ValidateOptions& opt) {
    const auto s = settings(opt);
    const Fixture a(fixtures::ctmc_metastable_generator(), opt);
    ChainDynamics da(a.chain);
    WorkerPool pool(opt.workers);
    const Index x0 = 0;
    const Index f_state = 0;
    const std::size_t replicas = 4;
    const ChainObs obs{indicator(f_state)};
    Eigen::VectorXd f = Eigen::VectorXd::Zero(a.set.size());
    f(a.set.position(f_state)) = 1;
    const double serial = expected_exit_integral(a.set, f)(a.set.position(x0));
    const double sup_exit = expected_exit_times(a.set).maxCoeff();
    const double thresholds[] = {2, 5, 10, 20};
    std::vector<CheckResult> out;

    for (int engine = 0; engine < 2; ++engine) {
        const char* tag = engine == 0 ? "CTMC" : "embedded";
        double prev_err = 0, prev_se = 0;
        for (std::size_t k = 0; k < 4; ++k) {
            const double th = thresholds[k];
            RngStream rng(opt.seed, 400 + 10 * static_cast<std::uint64_t>(engine) + k);
            std::vector<double> delta;
            delta.reserve(s.cycles);
            for (std::size_t i = 0; i < s.cycles; ++i) {
                // decorrelation from x0; an exit before it completes ends the cycle serially
                Index x = x0;
                double F = 0;
                bool exited = false;
                if (engine == 0) {
                    double dwell = 0;
                    while (true) {
                        const double q = da.total_rate(x);
                        const double dt = rng.exponential(q);
                        if (dwell + dt >= th) {
                            F += (x == f_state) * (th - dwell);
                            break;
                        }
                        F += (x == f_state) * dt;
                        dwell += dt;
                        da.fire(x, rng.uniform() * q);
                        if (!a.set.contains(x)) {
                            exited = true;
                            break;
                        }
                    }
                } else {
                    for (std::uint64_t n = 1; n < static_cast<std::uint64_t>(th); ++n) {
                        const double q = da.total_rate(x);
                        F += (x == f_state) * rng.exponential(q);
                        da.fire(x, rng.uniform() * q);
                        if (!a.set.contains(x)) {
                            exited = true;
                            break;
                        }
                    }
                }
                if (!exited) {
                    // dephasing replaced by exact QSD samples
                    const auto& law = engine == 0 ? a.ctmc.distribution : a.dtmc.distribution;
                    const auto seeds = draw(a.set, law, replicas, rng);
                    const auto stream = rng.child(i);
                    F += engine == 0 ? parallel_stage_ctmc(da, a.in_w(), std::span<const Index>(seeds), std::span(obs),
                                                           stream, pool)
                                           .sums.observables[0]
                                     : parallel_stage_embedded(da, a.in_w(), std::span<const Index>(seeds),
                                                               std::span(obs), stream, pool)
                                           .sums.observables[0];
                }
                delta.push_back(F);
            }
            const auto m = mean_se(delta);
            const double err = std::abs(m.mean - serial);
            const double tv = engine == 0
                                  ? tv_distance(conditional_law_ctmc(a.set, x0, th), a.ctmc.distribution)
                                  : tv_distance(conditional_law_dtmc(a.set, x0, static_cast<Index>(th) - 1),
                                                a.dtmc.distribution);
            const double bound = sup_exit * tv + s.sigmas * m.std_error;
            const std::string th_text = std::to_string(static_cast<int>(th));
            out.push_back({std::string(tag) + " one-cycle error within the TV bound, threshold " + th_text, err, bound,
                           "|error| <= sup E[T] TV + k se", err <= bound});
            if (k > 0) {
                const double allowed = prev_err + s.sigmas * std::hypot(prev_se, m.std_error);
                out.push_back({std::string(tag) + " one-cycle error non-increasing, threshold " + th_text, err, allowed,
                               "|error| <= previous + k se", err <= allowed});
            }
            prev_err = err;
            prev_se = m.std_error;
        }
    }
    return out;
}

std::vector<CheckResult> run_validation(const ValidateOptions& opt) {
    std::vector<CheckResult> all;
    for (auto* check : {check_eigen_fixtures, check_exit_laws, check_parallel_identities, check_unbiasedness,
                        check_error_decay}) {
        auto part = check(opt);
        all.insert(all.end(), part.begin(), part.end());
    }
    return all;
}

void print_checks(std::ostream& out, const std::vector<CheckResult>& checks) {
    const auto flags = out.flags();
    for (const auto& c : checks) {
        out << (c.passed ? "PASS " : "FAIL ") << c.name << ": statistic " << std::setprecision(6) << c.statistic
            << ", threshold " << c.threshold << " (" << c.rule << ")\n";
    }
    out.flags(flags);
}

bool all_passed(const std::vector<CheckResult>& checks) {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

}  // namespace parrep
