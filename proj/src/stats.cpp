#include "parrep/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include <unsupported/Eigen/SpecialFunctions>

#include "parrep/errors.hpp"

namespace parrep {

BatchMeansCI batch_means(std::span<const double> num, std::span<const double> den, std::size_t batches,
                         std::size_t min_batches) {
    if (num.size() != den.size()) throw InputError("batch_means: numerator and denominator lengths differ");
    if (batches == 0) throw InputError("batch_means: need at least one batch");
    BatchMeansCI ci;
    double total_num = 0;
    double total_den = 0;
    for (std::size_t i = 0; i < num.size(); ++i) {
        total_num += num[i];
        total_den += den[i];
    }
    ci.estimate = total_num / total_den;
    ci.batches = std::min(batches, num.size());
    ci.std_error = std::numeric_limits<double>::quiet_NaN();
    if (ci.batches == 0) return ci;
    ci.batch_size = num.size() / ci.batches;
    if (ci.batches < min_batches || ci.batches < 2) return ci;

    std::vector<double> bn(ci.batches, 0.0), bd(ci.batches, 0.0);
    for (std::size_t i = 0; i < num.size(); ++i) {
        const std::size_t b = std::min(i / ci.batch_size, ci.batches - 1);
        bn[b] += num[i];
        bd[b] += den[i];
    }
    // ratio-estimator variance from batch residuals
    double ss = 0;
    for (std::size_t b = 0; b < ci.batches; ++b) {
        const double e = bn[b] - ci.estimate * bd[b];
        ss += e * e;
    }
    const double k = static_cast<double>(ci.batches);
    const double mean_den = total_den / k;
    ci.std_error = std::sqrt(ss / (k * (k - 1))) / mean_den;
    return ci;
}

MeanSE mean_se(std::span<const double> xs) {
    MeanSE out;
    out.n = xs.size();
    if (xs.empty()) return out;
    const double n = static_cast<double>(xs.size());
    out.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    if (xs.size() < 2) {
        out.std_error = std::numeric_limits<double>::quiet_NaN();
        return out;
    }
    double ss = 0;
    for (double x : xs) ss += (x - out.mean) * (x - out.mean);
    out.std_error = std::sqrt(ss / (n - 1) / n);
    return out;
}

double kolmogorov_tail(double t) {
    if (t <= 0) return 1;
    if (t < 1.18) {
        // P(K <= t) = sqrt(2 pi)/t sum_k exp(-(2k-1)^2 pi^2 / (8 t^2))
        const double y = std::exp(-std::numbers::pi * std::numbers::pi / (8 * t * t));
        double sum = 0;
        for (int k = 1; k <= 50; ++k) {
            const double term = std::pow(y, (2 * k - 1) * (2 * k - 1));
            sum += term;
            if (term < 1e-17) break;
        }
        return std::clamp(1 - std::sqrt(2 * std::numbers::pi) / t * sum, 0.0, 1.0);
    }
    double sum = 0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * t * t);
        sum += (k % 2 ? 1 : -1) * term;
        if (term < 1e-17) break;
    }
    return std::clamp(2 * sum, 0.0, 1.0);
}

namespace {

double ks_p_value(double d, double effective_n) {
    const double en = std::sqrt(effective_n);
    return kolmogorov_tail((en + 0.12 + 0.11 / en) * d);
}

}  // namespace

TestResult ks_test(std::vector<double> xs, const std::function<double(double)>& cdf) {
    if (xs.empty()) throw InputError("ks_test: empty sample");
    std::sort(xs.begin(), xs.end());
    const double n = static_cast<double>(xs.size());
    double d = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double f = cdf(xs[i]);
        d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
    }
    return {d, ks_p_value(d, n), 0};
}

TestResult ks_test_two_sample(std::vector<double> xs, std::vector<double> ys) {
    if (xs.empty() || ys.empty()) throw InputError("ks_test_two_sample: empty sample");
    std::sort(xs.begin(), xs.end());
    std::sort(ys.begin(), ys.end());
    const double n = static_cast<double>(xs.size());
    const double m = static_cast<double>(ys.size());
    std::size_t i = 0, j = 0;
    double d = 0;
    while (i < xs.size() && j < ys.size()) {
        const double v = std::min(xs[i], ys[j]);
        while (i < xs.size() && xs[i] <= v) ++i;
        while (j < ys.size() && ys[j] <= v) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m));
    }
    return {d, ks_p_value(d, n * m / (n + m)), 0};
}

double chi2_upper_tail(double x, double dof) {
    if (dof <= 0) throw InputError("chi2: degrees of freedom must be positive");
    if (x <= 0) return 1;
    return Eigen::numext::igammac(dof / 2, x / 2);
}

TestResult chi2_gof(std::span<const std::uint64_t> observed, std::span<const double> probabilities,
                    double min_expected) {
    if (observed.size() != probabilities.size() || observed.empty())
        throw InputError("chi2_gof: observed and probabilities must have equal, non-zero length");
    const double n = static_cast<double>(std::accumulate(observed.begin(), observed.end(), std::uint64_t{0}));
    std::vector<double> obs, exp;
    double o = 0, e = 0;
    for (std::size_t k = 0; k < observed.size(); ++k) {
        o += static_cast<double>(observed[k]);
        e += probabilities[k] * n;
        if (e >= min_expected) {
            obs.push_back(o);
            exp.push_back(e);
            o = e = 0;
        }
    }
    if (e > 0 || o > 0) {
        if (exp.empty()) {
            obs.push_back(o);
            exp.push_back(e);
        } else {
            obs.back() += o;
            exp.back() += e;
        }
    }
    if (exp.size() < 2) throw InputError("chi2_gof: fewer than two bins after pooling");
    double stat = 0;
    for (std::size_t k = 0; k < exp.size(); ++k) stat += (obs[k] - exp[k]) * (obs[k] - exp[k]) / exp[k];
    const double dof = static_cast<double>(exp.size() - 1);
    return {stat, chi2_upper_tail(stat, dof), dof};
}

TestResult chi2_geometric(std::span<const std::uint64_t> samples, double p, double min_expected) {
    if (!(p > 0 && p <= 1)) throw InputError("chi2_geometric: p must lie in (0, 1]");
    if (samples.empty()) throw InputError("chi2_geometric: empty sample");
    const double n = static_cast<double>(samples.size());
    // last bin K where the tail P(N >= K) still carries min_expected
    std::uint64_t k_max = 1;
    while (n * std::pow(1 - p, static_cast<double>(k_max)) >= min_expected) ++k_max;
    std::vector<std::uint64_t> observed(k_max, 0);
    std::vector<double> prob(k_max);
    for (auto s : samples) {
        if (s == 0) throw InputError("chi2_geometric: samples must be >= 1");
        ++observed[std::min<std::uint64_t>(s, k_max) - 1];
    }
    for (std::uint64_t k = 1; k < k_max; ++k) prob[k - 1] = p * std::pow(1 - p, static_cast<double>(k - 1));
    prob[k_max - 1] = std::pow(1 - p, static_cast<double>(k_max - 1));
    return chi2_gof(observed, prob, min_expected);
}

TestResult chi2_independence(std::vector<std::vector<std::uint64_t>> table) {
    std::erase_if(table, [](const auto& row) {
        return std::all_of(row.begin(), row.end(), [](auto c) { return c == 0; });
    });
    if (table.empty()) throw InputError("chi2_independence: empty table");
    const std::size_t cols = table[0].size();
    for (const auto& row : table)
        if (row.size() != cols) throw InputError("chi2_independence: ragged table");
    std::vector<double> col_sum(cols, 0.0), row_sum(table.size(), 0.0);
    double n = 0;
    for (std::size_t i = 0; i < table.size(); ++i)
        for (std::size_t j = 0; j < cols; ++j) {
            const double c = static_cast<double>(table[i][j]);
            row_sum[i] += c;
            col_sum[j] += c;
            n += c;
        }
    std::vector<std::size_t> live;
    for (std::size_t j = 0; j < cols; ++j)
        if (col_sum[j] > 0) live.push_back(j);
    if (table.size() < 2 || live.size() < 2) return {0, 1, 0};  // degenerate: independence is trivial
    double stat = 0;
    for (std::size_t i = 0; i < table.size(); ++i)
        for (auto j : live) {
            const double e = row_sum[i] * col_sum[j] / n;
            const double d = static_cast<double>(table[i][j]) - e;
            stat += d * d / e;
        }
    const double dof = static_cast<double>((table.size() - 1) * (live.size() - 1));
    return {stat, chi2_upper_tail(stat, dof), dof};
}

TestResult chi2_homogeneity(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b) {
    std::uint64_t k = 0;
    for (auto v : a) k = std::max(k, v + 1);
    for (auto v : b) k = std::max(k, v + 1);
    std::vector<std::vector<std::uint64_t>> table(2, std::vector<std::uint64_t>(k, 0));
    for (auto v : a) ++table[0][v];
    for (auto v : b) ++table[1][v];
    return chi2_independence(std::move(table));
}

std::vector<std::size_t> quantile_bins(std::span<const double> values, std::size_t groups) {
    if (groups == 0) throw InputError("quantile_bins: need at least one group");
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return values[a] < values[b]; });
    std::vector<std::size_t> bin(values.size());
    const double n = static_cast<double>(values.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j < order.size() && values[order[j]] == values[order[i]]) ++j;
        const auto b = std::min(groups - 1, static_cast<std::size_t>(static_cast<double>(i) * static_cast<double>(groups) / n));
        for (std::size_t k = i; k < j; ++k) bin[order[k]] = b;
        i = j;
    }
    return bin;
}

}  // namespace parrep
