#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace parrep {

/// Ratio estimate sum(num) / sum(den) with a batch-means standard error.
struct BatchMeansCI {
    double estimate = 0;
    double std_error = 0;  // NaN when there are fewer than `min_batches` batches
    std::size_t batches = 0;
    std::size_t batch_size = 0;  // records per batch; the last batch absorbs the remainder
};

/// Batches consecutive records. The estimate is the plain ratio of the
/// in-order sums, so it matches an accumulator built the same way bitwise.
BatchMeansCI batch_means(std::span<const double> numerators, std::span<const double> denominators,
                         std::size_t batches = 20, std::size_t min_batches = 10);

struct MeanSE {
    double mean = 0;
    double std_error = 0;
    std::size_t n = 0;
};

MeanSE mean_se(std::span<const double> xs);

struct TestResult {
    double statistic = 0;
    double p_value = 0;
    double dof = 0;  // chi-square only

    bool passes(double alpha) const { return p_value >= alpha; }
};

/// Upper tail of the Kolmogorov distribution, P(K > t).
double kolmogorov_tail(double t);

/// One-sample KS test of `xs` against a continuous CDF.
TestResult ks_test(std::vector<double> xs, const std::function<double(double)>& cdf);

/// Two-sample KS test.
TestResult ks_test_two_sample(std::vector<double> xs, std::vector<double> ys);

/// P(chi2_dof > x).
double chi2_upper_tail(double x, double dof);

/// Goodness of fit of category counts to probabilities; bins with expected
/// count below `min_expected` are pooled into their neighbour.
TestResult chi2_gof(std::span<const std::uint64_t> observed, std::span<const double> probabilities,
                    double min_expected = 5);

/// Fit of positive integer samples to Geometric(p) on {1, 2, ...}, with the
/// tail pooled into one bin.
TestResult chi2_geometric(std::span<const std::uint64_t> samples, double p, double min_expected = 5);

/// Pearson independence test on a contingency table (rows x cols, row-major).
/// Empty rows and columns are dropped first.
TestResult chi2_independence(std::vector<std::vector<std::uint64_t>> table);

/// Homogeneity of two categorical samples (values 0..k-1).
TestResult chi2_homogeneity(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b);

/// Splits `values` into `groups` bins of (nearly) equal counts; returns the bin
/// of each value. Ties stay together.
std::vector<std::size_t> quantile_bins(std::span<const double> values, std::size_t groups);

}  // namespace parrep
