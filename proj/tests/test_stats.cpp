#include <cmath>
#include <random>

#include "doctest.h"
#include "parrep/rng.hpp"
#include "parrep/stats.hpp"

using namespace parrep;

TEST_CASE("chi-square tail against known quantiles") {
    // 95% quantiles from standard tables
    CHECK(chi2_upper_tail(3.841458820694124, 1) == doctest::Approx(0.05).epsilon(1e-9));
    CHECK(chi2_upper_tail(18.307038053275146, 10) == doctest::Approx(0.05).epsilon(1e-9));
    // dof 2 is exponential: P = exp(-x/2)
    CHECK(chi2_upper_tail(4.2, 2) == doctest::Approx(std::exp(-2.1)).epsilon(1e-12));
}

TEST_CASE("Kolmogorov tail") {
    CHECK(kolmogorov_tail(1.3580986393225507) == doctest::Approx(0.05).epsilon(1e-6));
    CHECK(kolmogorov_tail(1.6276236115189293) == doctest::Approx(0.01).epsilon(1e-6));
    // both series agree where they meet
    CHECK(kolmogorov_tail(1.1799999) == doctest::Approx(kolmogorov_tail(1.1800001)).epsilon(1e-6));
    CHECK(kolmogorov_tail(0) == 1);
}

TEST_CASE("KS accepts a correct exponential and rejects a wrong rate") {
    RngStream rng(1, 2);
    std::vector<double> xs(10000);
    for (auto& x : xs) x = rng.exponential(2.0);
    CHECK(ks_test(xs, [](double t) { return 1 - std::exp(-2 * t); }).p_value > 0.01);
    CHECK(ks_test(xs, [](double t) { return 1 - std::exp(-2.2 * t); }).p_value < 0.01);

    std::vector<double> ys(10000);
    for (auto& y : ys) y = rng.exponential(2.0);
    CHECK(ks_test_two_sample(xs, ys).p_value > 0.01);
    for (auto& y : ys) y *= 1.1;
    CHECK(ks_test_two_sample(xs, ys).p_value < 0.01);
}

TEST_CASE("geometric goodness of fit") {
    RngStream rng(3, 4);
    std::vector<std::uint64_t> ns(10000);
    for (auto& n : ns) {
        n = 1;
        while (rng.uniform() >= 0.2) ++n;
    }
    CHECK(chi2_geometric(ns, 0.2).p_value > 0.01);
    CHECK(chi2_geometric(ns, 0.22).p_value < 0.01);
}

TEST_CASE("independence and homogeneity") {
    RngStream rng(5, 6);
    std::vector<std::vector<std::uint64_t>> table(4, std::vector<std::uint64_t>(3, 0));
    std::vector<std::vector<std::uint64_t>> dependent = table;
    for (int i = 0; i < 10000; ++i) {
        const auto a = rng.below(4);
        const auto b = rng.below(3);
        ++table[a][b];
        ++dependent[a][a < 2 && rng.uniform() < 0.2 ? 0 : b];
    }
    CHECK(chi2_independence(table).p_value > 0.01);
    CHECK(chi2_independence(table).dof == 6);
    CHECK(chi2_independence(dependent).p_value < 0.01);

    std::vector<std::uint64_t> a(5000), b(5000);
    for (auto& v : a) v = rng.below(3);
    for (auto& v : b) v = rng.below(3);
    CHECK(chi2_homogeneity(a, b).p_value > 0.01);
    for (auto& v : b) v = rng.uniform() < 0.1 ? 0 : v;
    CHECK(chi2_homogeneity(a, b).p_value < 0.01);
}

TEST_CASE("degenerate contingency tables are trivially independent") {
    std::vector<std::vector<std::uint64_t>> single_column{{10}, {20}, {30}};
    CHECK(chi2_independence(single_column).p_value == 1);
}

TEST_CASE("batch means") {
    std::vector<double> num{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17, 18, 19, 20, 21};
    std::vector<double> den(num.size(), 1.0);
    const auto ci = batch_means(num, den, 20);
    double n = 0, d = 0;
    for (std::size_t i = 0; i < num.size(); ++i) {
        n += num[i];
        d += den[i];
    }
    CHECK(ci.estimate == n / d);  // bitwise
    CHECK(ci.batches == 20);
    CHECK(ci.batch_size == 1);
    CHECK(ci.std_error > 0);

    const auto few = batch_means(std::span(num).first(5), std::span(den).first(5), 20);
    CHECK(std::isnan(few.std_error));
}

TEST_CASE("batch-means standard error on iid ratios matches the plain standard error") {
    RngStream rng(9, 9);
    std::vector<double> num(20000), den(20000, 1.0);
    for (auto& x : num) x = rng.uniform();
    const auto ci = batch_means(num, den, 20);
    const auto plain = mean_se(num);
    CHECK(ci.std_error == doctest::Approx(plain.std_error).epsilon(0.5));
    CHECK(std::abs(ci.estimate - 0.5) < 4 * plain.std_error);
}

TEST_CASE("quantile bins keep ties together") {
    std::vector<double> v{5, 1, 1, 1, 2, 3, 4, 4, 9, 7};
    const auto b = quantile_bins(v, 3);
    CHECK(b[1] == b[2]);
    CHECK(b[2] == b[3]);
    CHECK(b[6] == b[7]);
    CHECK(b[1] == 0);
    CHECK(b[8] == 2);
}
