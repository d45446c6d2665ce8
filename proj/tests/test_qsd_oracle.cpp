#include <cmath>
#include <random>

#include "doctest.h"
#include "parrep/fixtures.hpp"
#include "parrep/qsd_oracle.hpp"
#include "parrep/stats.hpp"

using namespace parrep;

namespace {

bool within_rel(double value, double reference, double rel) {
    return std::abs(value - reference) <= rel * std::abs(reference);
}

MetastableSet<double> first_example(double eps = 1e-3) {
    return make_metastable_set(ExplicitChain<>(fixtures::ctmc_metastable_generator(eps)), fixtures::example_set());
}

MetastableSet<double> second_example(double eps = 1e-3) {
    return make_metastable_set(ExplicitChain<>(fixtures::dtmc_metastable_generator(eps)), fixtures::example_set());
}

Eigen::MatrixXd random_generator(Eigen::Index n, std::mt19937_64& gen, double density = 0.7) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Eigen::MatrixXd q = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j)
            if (i != j && u(gen) < density) q(i, j) = 0.1 + 2 * u(gen);
        q(i, (i + 1) % n) += 0.05;  // a cycle keeps it irreducible
        q(i, i) = 0;
        q(i, i) = -q.row(i).sum();
    }
    return q;
}

}  // namespace

TEST_CASE("single-state W") {
    Eigen::MatrixXd q(2, 2);
    q << -2.5, 2.5, 1, -1;
    const ExplicitChain<> chain(q);
    const auto w = make_metastable_set(chain, {0});
    const auto s = qsd_ctmc(w);
    CHECK(s.distribution(0) == 1);
    CHECK(s.dominant == doctest::Approx(-2.5));
    CHECK(expected_exit_time(w, Eigen::Index{0}) == doctest::Approx(1 / 2.5));
    const auto idx = metastability_index(w);
    CHECK(idx.ctmc_index == 1);
    CHECK(idx.dtmc_index == 1);
}

TEST_CASE("CTMC-metastable example: eigenvalues") {
    const double eps = 1e-3;
    const auto w = first_example(eps);
    const auto c = qsd_ctmc(w);
    const auto d = qsd_dtmc(w);
    CHECK(within_rel(c.dominant, -eps / 2, 0.05));
    CHECK(within_rel(c.subdominant, -0.5, 0.05));
    CHECK(within_rel(d.dominant, 0.81, 0.05));
    CHECK(within_rel(d.subdominant, 0.5, 0.05));
    CHECK(c.residual < 1e-8);
    CHECK(d.residual < 1e-8);
    CHECK(std::abs(c.distribution.sum() - 1) < 1e-10);
    CHECK((c.distribution.array() >= 0).all());
    CHECK(c.dominant > c.subdominant);
    CHECK(d.dominant > d.subdominant);
}

TEST_CASE("DTMC-metastable example: eigenvalues") {
    const double eps = 1e-3;
    const auto w = second_example(eps);
    const auto c = qsd_ctmc(w);
    const auto d = qsd_dtmc(w);
    CHECK(within_rel(d.dominant, 1 - eps / 5, 0.05));
    CHECK(within_rel(d.subdominant, std::sqrt(2.0) / 2, 0.05));
    CHECK(within_rel(c.dominant, -0.2, 0.05));
    CHECK(within_rel(c.subdominant, -1.5 / eps, 0.05));
    CHECK(c.residual < 1e-8);
    CHECK(d.residual < 1e-8);
}

TEST_CASE("metastability verdicts") {
    const auto a = first_example();
    const auto ia = metastability_index(a);
    // from the approximations lambda_1 = -eps/2, Re lambda_2 = -1/2, sigma_1 = 0.81, |sigma_2| = 1/2
    CHECK(within_rel(ia.ctmc_index, 0.0005 / 0.4995, 0.05));
    CHECK(within_rel(ia.dtmc_index, (0.5 / 0.81) / 0.81, 0.05));
    const auto va = classify_metastability(qsd_ctmc(a), qsd_dtmc(a));
    CHECK(va.ctmc);
    CHECK_FALSE(va.dtmc);

    const auto b = second_example();
    const auto vb = classify_metastability(qsd_ctmc(b), qsd_dtmc(b));
    CHECK_FALSE(vb.ctmc);
    CHECK(vb.dtmc);
}

TEST_CASE("power iteration agrees with the dense eigensolver on random blocks") {
    std::mt19937_64 gen(17);
    for (int trial = 0; trial < 20; ++trial) {
        const ExplicitChain<> chain(random_generator(8, gen));
        const auto w = make_metastable_set(chain, {0, 1, 2, 3, 4, 5});
        const auto c = qsd_ctmc(w);
        const auto oracle = dense_left_perron_vector(w.q_w);
        CHECK((c.distribution - oracle).cwiseAbs().maxCoeff() < 1e-6);
        const auto d = qsd_dtmc(w);
        CHECK((d.distribution - dense_left_perron_vector(w.p_w)).cwiseAbs().maxCoeff() < 1e-6);
        CHECK(c.residual < 1e-8);
        CHECK(d.residual < 1e-8);
    }
}

TEST_CASE("periodic block is rejected") {
    const double alpha = 0.6;
    Eigen::MatrixXd q(3, 3);
    q << -1, alpha, 1 - alpha, alpha, -1, 1 - alpha, 0.5, 0.5, -1;
    const auto w = make_metastable_set(ExplicitChain<>(q), {0, 1});
    CHECK(w.p_w(0, 1) == doctest::Approx(alpha));
    CHECK_THROWS_AS(qsd_dtmc(w), ReducibleError);
}

TEST_CASE("reducible block is rejected") {
    Eigen::MatrixXd q(3, 3);
    q << -1, 1, 0, 0, -1, 1, 1, 0, -1;
    const auto w = make_metastable_set(ExplicitChain<>(q), {0, 1});
    CHECK_THROWS_AS(qsd_ctmc(w), ReducibleError);
}

TEST_CASE("fast-exit W shows no separation") {
    Eigen::MatrixXd q(2, 2);
    q << -50, 50, 1, -1;
    const auto w = make_metastable_set(ExplicitChain<>(q), {0});
    const auto idx = metastability_index(w);
    CHECK(idx.ctmc_index == doctest::Approx(1));
    CHECK(idx.dtmc_index == doctest::Approx(1));
}

TEST_CASE("exit expectations from the QSDs") {
    for (const auto& w : {first_example(), second_example()}) {
        const auto c = qsd_ctmc(w);
        const auto d = qsd_dtmc(w);
        CHECK(std::abs(expected_exit_time(w, c.distribution) * -c.dominant - 1) < 1e-8);
        CHECK(std::abs(expected_exit_steps(w, d.distribution) * (1 - d.dominant) - 1) < 1e-8);
    }
}

TEST_CASE("stationary distributions") {
    Eigen::MatrixXd q(2, 2);
    q << -1, 1, 1, -1;
    const auto pi = stationary_distribution(ExplicitChain<>(q));
    CHECK(pi(0) == doctest::Approx(0.5));
    CHECK(pi(1) == doctest::Approx(0.5));

    std::mt19937_64 gen(23);
    const ExplicitChain<> chain(random_generator(5, gen));
    const auto p = stationary_distribution(chain);
    CHECK((p * chain.generator()).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(std::abs(p.sum() - 1) < 1e-10);

    Eigen::MatrixXd reducible(3, 3);
    reducible << -1, 1, 0, 1, -1, 0, 0, 1, -1;
    CHECK_THROWS_AS(stationary_distribution(ExplicitChain<>(reducible)), ReducibleError);
}

TEST_CASE("stationary distribution matches long-run SSA occupancy") {
    std::mt19937_64 gen(29);
    const ExplicitChain<> chain(random_generator(5, gen));
    const auto pi = stationary_distribution(chain);
    ChainDynamics dyn(chain);
    RngStream rng(29, 1);
    std::vector<Observable<Eigen::Index>> obs;
    for (Eigen::Index s = 0; s < 5; ++s) obs.push_back(indicator(s));
    const auto [windows, last] = run_serial_slices(dyn, Eigen::Index{0}, std::span<const Observable<Eigen::Index>>(obs),
                                                   2e4, 20, rng);
    for (std::size_t s = 0; s < 5; ++s) {
        std::vector<double> num, den;
        for (const auto& w : windows) {
            num.push_back(w.time_integral[s]);
            den.push_back(w.elapsed_time);
        }
        const auto ci = batch_means(num, den, 20);
        CHECK(std::abs(ci.estimate - pi(static_cast<Eigen::Index>(s))) < 3 * ci.std_error);
    }
}

TEST_CASE("truncated linear network reproduces the Poisson means") {
    const auto net = fixtures::linear_network();
    const auto chain = truncate_network(net, 40);
    CHECK(chain.states.size() == 41 * 41 * 41);
    const auto pi = stationary_distribution(chain.generator);
    double m[3] = {0, 0, 0};
    for (std::size_t k = 0; k < chain.states.size(); ++k)
        for (std::size_t i = 0; i < 3; ++i) m[i] += pi(static_cast<Eigen::Index>(k)) * chain.states[k][i];
    // exact means: c1 (c3 + c4) / (c2 c4), c1 / c4, c1 / c5
    const double exact[3] = {0.1 * (100 + 0.01) / (100 * 0.01), 0.1 / 0.01, 0.1 / 0.01};
    for (int i = 0; i < 3; ++i) CHECK(within_rel(m[i], exact[i], 0.01));
    CHECK(chain.boundary_mass(pi) < 1e-3);
}

TEST_CASE("tv_distance") {
    Eigen::RowVector2d p(0.7, 0.3), q(0.5, 0.5);
    CHECK(tv_distance(p, q) == doctest::Approx(0.2));
    CHECK(tv_distance(p, p) == 0);
    CHECK(tv_distance(Eigen::RowVector2d(1, 0), Eigen::RowVector2d(0, 1)) == 1);
}

TEST_CASE("empirical conditional law") {
    const ExplicitChain<> chain(fixtures::ctmc_metastable_generator());
    const auto w = first_example();
    RngStream rng(31, 0);
    const auto at_zero = empirical_conditional_law(chain, w, 1, 0.0, -1, 100, rng);
    CHECK(at_zero.distribution(1) == 1);
    CHECK(at_zero.distribution.sum() == 1);

    const auto mu = qsd_dtmc(w).distribution;
    const auto law = empirical_conditional_law(chain, w, 0, 0.0, 30, 100000, rng);
    CHECK(law.survivors == 100000);
    CHECK(tv_distance(law.distribution, mu) < 0.02);

    double previous = 1;
    for (Eigen::Index n : {2, 5, 10, 20}) {
        const double tv = tv_distance(empirical_conditional_law(chain, w, 2, 0.0, n, 100000, rng).distribution, mu);
        CHECK(tv < previous);
        previous = tv;
    }

    CHECK_THROWS_AS(empirical_conditional_law(chain, w, 0, 0.0, 30, 10, rng, 1), ConvergenceError);
}

TEST_CASE("oracle is templated on the scalar") {
    const ExplicitChain<long double> chain(fixtures::ctmc_metastable_generator().cast<long double>());
    const auto w = make_metastable_set(chain, fixtures::example_set());
    const auto c = qsd_ctmc(w);
    CHECK(std::abs(static_cast<double>(c.dominant) + 0.0004995) < 1e-6);
}
