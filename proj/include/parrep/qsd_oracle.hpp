#pragma once

// Linear-algebra ground truth for small explicit chains.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <queue>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <unsupported/Eigen/MatrixFunctions>

#include "parrep/dynamics.hpp"
#include "parrep/errors.hpp"
#include "parrep/net_model.hpp"
#include "parrep/rng.hpp"
#include "parrep/ssa.hpp"

namespace parrep {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using RowVectorX = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// W together with the restrictions Q_W and P_W.
template <typename Scalar = double>
struct MetastableSet {
    std::vector<Eigen::Index> members;  // indices into the enumerated space, in W order
    MatrixX<Scalar> q_w;
    MatrixX<Scalar> p_w;
    VectorX<Scalar> rates;  // q(x) for x in W, in W order

    Eigen::Index size() const { return static_cast<Eigen::Index>(members.size()); }

    /// Position of a chain state inside W, or -1.
    Eigen::Index position(Eigen::Index state) const {
        auto it = std::find(members.begin(), members.end(), state);
        return it == members.end() ? -1 : static_cast<Eigen::Index>(it - members.begin());
    }
    bool contains(Eigen::Index state) const { return position(state) >= 0; }
};

template <typename Scalar>
MetastableSet<Scalar> make_metastable_set(const ExplicitChain<Scalar>& chain,
                                          std::vector<Eigen::Index> members) {
    const Eigen::Index n = chain.size();
    if (members.empty()) throw InputError("W must be non-empty");
    if (static_cast<Eigen::Index>(members.size()) >= n) throw InputError("W must be a proper subset");
    auto sorted = members;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw InputError("W lists a state twice");
    if (sorted.front() < 0 || sorted.back() >= n) throw InputError("W member out of range");

    const auto p = embedded_matrix(chain);
    const auto m = static_cast<Eigen::Index>(members.size());
    MetastableSet<Scalar> w{std::move(members), MatrixX<Scalar>(m, m), MatrixX<Scalar>(m, m),
                            VectorX<Scalar>(m)};
    for (Eigen::Index i = 0; i < m; ++i) {
        w.rates(i) = chain.rate(w.members[i]);
        for (Eigen::Index j = 0; j < m; ++j) {
            w.q_w(i, j) = chain.generator()(w.members[i], w.members[j]);
            w.p_w(i, j) = p(w.members[i], w.members[j]);
        }
    }
    return w;
}

namespace detail {

/// Strong connectivity of the directed graph of positive off-diagonal entries.
template <typename Derived>
bool is_irreducible(const Eigen::MatrixBase<Derived>& a) {
    const Eigen::Index n = a.rows();
    auto reaches_all = [&](bool transpose) {
        std::vector<char> seen(static_cast<std::size_t>(n), 0);
        std::vector<Eigen::Index> stack{0};
        seen[0] = 1;
        Eigen::Index count = 1;
        while (!stack.empty()) {
            const auto u = stack.back();
            stack.pop_back();
            for (Eigen::Index v = 0; v < n; ++v) {
                const auto w = transpose ? a(v, u) : a(u, v);
                if (u != v && w > 0 && !seen[static_cast<std::size_t>(v)]) {
                    seen[static_cast<std::size_t>(v)] = 1;
                    ++count;
                    stack.push_back(v);
                }
            }
        }
        return count == n;
    };
    return reaches_all(false) && reaches_all(true);
}

/// Period of an irreducible nonnegative matrix (gcd of cycle lengths).
template <typename Derived>
Eigen::Index period(const Eigen::MatrixBase<Derived>& a) {
    const Eigen::Index n = a.rows();
    std::vector<Eigen::Index> level(static_cast<std::size_t>(n), -1);
    std::queue<Eigen::Index> frontier;
    level[0] = 0;
    frontier.push(0);
    Eigen::Index g = 0;
    while (!frontier.empty()) {
        const auto u = frontier.front();
        frontier.pop();
        for (Eigen::Index v = 0; v < n; ++v) {
            if (!(a(u, v) > 0)) continue;
            auto& lv = level[static_cast<std::size_t>(v)];
            if (lv < 0) {
                lv = level[static_cast<std::size_t>(u)] + 1;
                frontier.push(v);
            } else {
                g = std::gcd(g, std::abs(level[static_cast<std::size_t>(u)] + 1 - lv));
            }
        }
    }
    return g;
}

}  // namespace detail

/// Perron pair of a restricted generator or transition block.
template <typename Scalar = double>
struct QsdSolution {
    RowVectorX<Scalar> distribution;  // nu (CTMC) or mu (embedded chain) over W
    Scalar dominant;                  // lambda_1 < 0, or sigma_1 in (0,1)
    Scalar subdominant;               // Re lambda_2, or |sigma_2|
    Scalar residual;                  // || v A - dominant v ||_inf
    Eigen::Index iterations;
};

struct EigenOptions {
    double residual_tolerance = 1e-8;
    Eigen::Index max_iterations = 100000;
};

/// Full spectrum of a dense block, sorted by decreasing real part.
template <typename Derived>
std::vector<std::complex<typename Derived::Scalar>> dense_spectrum(const Eigen::MatrixBase<Derived>& a) {
    using Scalar = typename Derived::Scalar;
    Eigen::EigenSolver<MatrixX<Scalar>> solver(a.eval(), false);
    if (solver.info() != Eigen::Success) throw ConvergenceError("dense eigensolver failed");
    std::vector<std::complex<Scalar>> ev(solver.eigenvalues().data(),
                                         solver.eigenvalues().data() + solver.eigenvalues().size());
    std::sort(ev.begin(), ev.end(), [](auto l, auto r) {
        return l.real() != r.real() ? l.real() > r.real() : l.imag() > r.imag();
    });
    return ev;
}

/// Normalized left Perron vector of a dense block by dense eigen-decomposition
/// (independent of the power iteration used in qsd_ctmc/qsd_dtmc).
template <typename Derived>
RowVectorX<typename Derived::Scalar> dense_left_perron_vector(const Eigen::MatrixBase<Derived>& a) {
    using Scalar = typename Derived::Scalar;
    Eigen::EigenSolver<MatrixX<Scalar>> solver(a.transpose().eval(), true);
    if (solver.info() != Eigen::Success) throw ConvergenceError("dense eigensolver failed");
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < solver.eigenvalues().size(); ++i)
        if (solver.eigenvalues()(i).real() > solver.eigenvalues()(best).real()) best = i;
    RowVectorX<Scalar> v = solver.eigenvectors().col(best).real().transpose();
    return v / v.sum();
}

namespace detail {

/// Left power iteration v <- v A / |v A|_1 on a nonnegative primitive matrix.
template <typename Scalar>
std::pair<RowVectorX<Scalar>, Eigen::Index> left_power_iteration(const MatrixX<Scalar>& a,
                                                                const EigenOptions& opt) {
    const Eigen::Index n = a.rows();
    RowVectorX<Scalar> v = RowVectorX<Scalar>::Constant(n, Scalar(1) / Scalar(n));
    for (Eigen::Index it = 1; it <= opt.max_iterations; ++it) {
        RowVectorX<Scalar> next = v * a;
        const Scalar mass = next.sum();
        if (!(mass > 0)) throw ConvergenceError("power iteration collapsed to zero");
        next /= mass;
        const Scalar change = (next - v).cwiseAbs().sum();
        v.swap(next);
        if (change < Scalar(64) * std::numeric_limits<Scalar>::epsilon()) return {v, it};
    }
    return {v, opt.max_iterations};
}

}  // namespace detail

/// QSD of X(t) in W: left Perron vector of Q_W, by power iteration on Q_W + sI.
template <typename Scalar>
QsdSolution<Scalar> qsd_ctmc(const MetastableSet<Scalar>& w, const EigenOptions& opt = {}) {
    const Eigen::Index m = w.size();
    if (!detail::is_irreducible(w.q_w)) throw ReducibleError("Q_W is reducible");
    const VectorX<Scalar> exit = -(w.q_w.rowwise().sum());
    if (!(exit.maxCoeff() > 0)) throw ReducibleError("W is absorbing: no exit channel");

    const Scalar shift = Scalar(1.05) * w.rates.maxCoeff();
    const MatrixX<Scalar> a = w.q_w + shift * MatrixX<Scalar>::Identity(m, m);
    auto [nu, iterations] = detail::left_power_iteration(a, opt);
    const Scalar lambda1 = -nu.dot(exit.transpose());
    const Scalar residual = (nu * w.q_w - lambda1 * nu).cwiseAbs().maxCoeff();
    if (!(residual < opt.residual_tolerance))
        throw ConvergenceError("qsd_ctmc: residual " + std::to_string(double(residual)) + " after " +
                               std::to_string(iterations) + " iterations");

    Scalar sub = -std::numeric_limits<Scalar>::infinity();
    if (m > 1) {
        auto ev = dense_spectrum(w.q_w);
        auto closest = std::min_element(ev.begin(), ev.end(), [&](auto l, auto r) {
            return std::abs(l - lambda1) < std::abs(r - lambda1);
        });
        ev.erase(closest);
        sub = ev.front().real();
    }
    return {nu, lambda1, sub, residual, iterations};
}

/// QSD of the embedded chain X_n in W: left Perron vector of P_W.
template <typename Scalar>
QsdSolution<Scalar> qsd_dtmc(const MetastableSet<Scalar>& w, const EigenOptions& opt = {}) {
    const Eigen::Index m = w.size();
    if (!detail::is_irreducible(w.p_w)) throw ReducibleError("P_W is reducible");
    const VectorX<Scalar> exit = VectorX<Scalar>::Ones(m) - w.p_w.rowwise().sum();
    if (!(exit.maxCoeff() > 0)) throw ReducibleError("W is absorbing: no exit channel");
    if (m == 1) throw ReducibleError("P_W = [0]: every step leaves a one-state W");
    if (const auto d = detail::period(w.p_w); d != 1)
        throw ReducibleError("P_W is periodic with period " + std::to_string(d));

    auto [mu, iterations] = detail::left_power_iteration(w.p_w, opt);
    const Scalar sigma1 = Scalar(1) - mu.dot(exit.transpose());
    const Scalar residual = (mu * w.p_w - sigma1 * mu).cwiseAbs().maxCoeff();
    if (!(residual < opt.residual_tolerance))
        throw ConvergenceError("qsd_dtmc: residual " + std::to_string(double(residual)) + " after " +
                               std::to_string(iterations) + " iterations");

    auto ev = dense_spectrum(w.p_w);
    std::sort(ev.begin(), ev.end(), [](auto l, auto r) { return std::abs(l) > std::abs(r); });
    auto closest = std::min_element(ev.begin(), ev.end(), [&](auto l, auto r) {
        return std::abs(l - sigma1) < std::abs(r - sigma1);
    });
    ev.erase(closest);
    return {mu, sigma1, std::abs(ev.front()), residual, iterations};
}

struct MetastabilityIndex {
    double ctmc_index;  // |lambda_1| / |lambda_1 - Re lambda_2|
    double dtmc_index;  // (|sigma_2| / sigma_1) / sigma_1
};

template <typename Scalar>
MetastabilityIndex metastability_index(const QsdSolution<Scalar>& ctmc, const QsdSolution<Scalar>& dtmc) {
    using std::abs;
    const double l1 = static_cast<double>(ctmc.dominant);
    const double l2 = static_cast<double>(ctmc.subdominant);
    const double s1 = static_cast<double>(dtmc.dominant);
    const double s2 = static_cast<double>(dtmc.subdominant);
    return {std::isinf(l2) ? 1.0 : std::abs(l1) / std::abs(l1 - l2), (s2 / s1) / s1};
}

template <typename Scalar>
MetastabilityIndex metastability_index(const MetastableSet<Scalar>& w, const EigenOptions& opt = {}) {
    // one state: no relaxation inside W, so no separation of timescales
    if (w.size() == 1) {
        qsd_ctmc(w, opt);
        return {1.0, 1.0};
    }
    return metastability_index(qsd_ctmc(w, opt), qsd_dtmc(w, opt));
}

/// Thresholds for the two conditions of the metastability definition: the
/// dominant exit rate must be near zero (|lambda_1|, or 1 - sigma_1, below
/// `escape`) and the separation ratio must be small.
struct MetastabilityThresholds {
    double escape = 0.1;
    double ctmc_ratio = 0.1;
    double dtmc_ratio = 1.0;  // sigma_1 > |sigma_2| / sigma_1
};

struct MetastabilityVerdict {
    bool ctmc;
    bool dtmc;
};

template <typename Scalar>
MetastabilityVerdict classify_metastability(const QsdSolution<Scalar>& ctmc, const QsdSolution<Scalar>& dtmc,
                                            const MetastabilityThresholds& th = {}) {
    const auto idx = metastability_index(ctmc, dtmc);
    return {std::abs(static_cast<double>(ctmc.dominant)) < th.escape && idx.ctmc_index < th.ctmc_ratio,
            1.0 - static_cast<double>(dtmc.dominant) < th.escape && idx.dtmc_index < th.dtmc_ratio};
}

/// E^x[T] for every x in W: solves Q_W u = -1.
template <typename Scalar>
VectorX<Scalar> expected_exit_times(const MetastableSet<Scalar>& w) {
    Eigen::FullPivLU<MatrixX<Scalar>> lu(-w.q_w);
    if (!lu.isInvertible()) throw ReducibleError("Q_W is singular: W does not leak");
    return lu.solve(VectorX<Scalar>::Ones(w.size()));
}

/// E^x[N] for every x in W: solves (I - P_W) m = 1.
template <typename Scalar>
VectorX<Scalar> expected_exit_steps(const MetastableSet<Scalar>& w) {
    Eigen::FullPivLU<MatrixX<Scalar>> lu(MatrixX<Scalar>::Identity(w.size(), w.size()) - w.p_w);
    if (!lu.isInvertible()) throw ReducibleError("I - P_W is singular: W does not leak");
    return lu.solve(VectorX<Scalar>::Ones(w.size()));
}

template <typename Scalar>
Scalar expected_exit_time(const MetastableSet<Scalar>& w, Eigen::Index start) {
    const auto pos = w.position(start);
    if (pos < 0) throw InputError("start state is not in W");
    return expected_exit_times(w)(pos);
}

template <typename Scalar>
Scalar expected_exit_time(const MetastableSet<Scalar>& w, const RowVectorX<Scalar>& start) {
    return start.dot(expected_exit_times(w).transpose());
}

template <typename Scalar>
Scalar expected_exit_steps(const MetastableSet<Scalar>& w, const RowVectorX<Scalar>& start) {
    return start.dot(expected_exit_steps(w).transpose());
}

/// E^x[ int_0^T f(X(s)) ds ] for x in W: solves -Q_W u = f.
template <typename Scalar>
VectorX<Scalar> expected_exit_integral(const MetastableSet<Scalar>& w, const VectorX<Scalar>& f) {
    Eigen::FullPivLU<MatrixX<Scalar>> lu(-w.q_w);
    if (!lu.isInvertible()) throw ReducibleError("Q_W is singular: W does not leak");
    return lu.solve(f);
}

/// Stationary law of an irreducible explicit chain: pi Q = 0, sum pi = 1.
template <typename Scalar>
RowVectorX<Scalar> stationary_distribution(const ExplicitChain<Scalar>& chain) {
    const auto& q = chain.generator();
    if (!detail::is_irreducible(q)) throw ReducibleError("chain is reducible");
    const Eigen::Index n = q.rows();
    MatrixX<Scalar> a = q.transpose();
    a.row(n - 1).setOnes();
    VectorX<Scalar> b = VectorX<Scalar>::Zero(n);
    b(n - 1) = 1;
    RowVectorX<Scalar> pi = Eigen::PartialPivLU<MatrixX<Scalar>>(a).solve(b).transpose();
    for (Eigen::Index i = 0; i < n; ++i)
        if (pi(i) < 0) pi(i) = 0;  // round-off on tiny entries
    return pi / pi.sum();
}

/// Reaction network restricted to the box 0 <= x_i <= cap. Reactions that
/// would push a species past the cap are suppressed (reflecting boundary).
struct TruncatedNetworkChain {
    std::vector<PopulationState> states;
    Eigen::SparseMatrix<double> generator;
    Count cap;

    Eigen::Index index_of(const PopulationState& x) const;
    /// Probability mass on states with at least one species at the cap.
    double boundary_mass(const Eigen::RowVectorXd& pi) const;
};

TruncatedNetworkChain truncate_network(const ReactionNetwork& net, Count cap);

/// Stationary law of a large sparse generator: Q^T with one equation replaced
/// by normalization, solved by ILUT-preconditioned BiCGSTAB (sparse LU fallback).
Eigen::RowVectorXd stationary_distribution(const Eigen::SparseMatrix<double>& generator);

/// Half L1 distance between distributions on a common index set.
template <typename DerivedP, typename DerivedQ>
double tv_distance(const Eigen::MatrixBase<DerivedP>& p, const Eigen::MatrixBase<DerivedQ>& q) {
    if (p.size() != q.size()) throw InputError("tv_distance needs a common support");
    return 0.5 * static_cast<double>((p.reshaped() - q.reshaped()).cwiseAbs().sum());
}

/// Exact law of X(t) given T > t, started at x in W.
template <typename Scalar>
RowVectorX<Scalar> conditional_law_ctmc(const MetastableSet<Scalar>& w, Eigen::Index x, Scalar t) {
    const auto pos = w.position(x);
    if (pos < 0) throw InputError("start state is not in W");
    const MatrixX<Scalar> flow = (w.q_w * t).exp();
    RowVectorX<Scalar> law = flow.row(pos);
    return law / law.sum();
}

/// Exact law of X_n given N > n, started at x in W.
template <typename Scalar>
RowVectorX<Scalar> conditional_law_dtmc(const MetastableSet<Scalar>& w, Eigen::Index x, Eigen::Index n) {
    const auto pos = w.position(x);
    if (pos < 0) throw InputError("start state is not in W");
    RowVectorX<Scalar> law = RowVectorX<Scalar>::Zero(w.size());
    law(pos) = 1;
    for (Eigen::Index k = 0; k < n; ++k) {
        law = law * w.p_w;
        law /= law.sum();
    }
    return law;
}

/// Monte-Carlo conditioned law (Yaglom estimate) in W.
template <typename Scalar = double>
struct EmpiricalLaw {
    RowVectorX<Scalar> distribution;
    std::uint64_t survivors;
    std::uint64_t launches;
};

/// Launches trajectories from x until `samples` survivors are collected
/// (or `max_launches` is reached). Clock is continuous time when `steps` < 0,
/// otherwise embedded steps; `time` is then ignored.
template <typename Scalar>
EmpiricalLaw<Scalar> empirical_conditional_law(const ExplicitChain<Scalar>& chain,
                                               const MetastableSet<Scalar>& w, Eigen::Index x,
                                               double time, Eigen::Index steps, std::uint64_t samples,
                                               RngStream& rng, std::uint64_t max_launches = 0) {
    if (!w.contains(x)) throw InputError("start state is not in W");
    if (max_launches == 0) max_launches = samples * 1000;
    const ChainDynamics<Scalar> dyn(chain);
    std::vector<Eigen::Index> pos(static_cast<std::size_t>(chain.size()), -1);
    for (Eigen::Index i = 0; i < w.size(); ++i) pos[static_cast<std::size_t>(w.members[i])] = i;

    EmpiricalLaw<Scalar> out{RowVectorX<Scalar>::Zero(w.size()), 0, 0};
    while (out.survivors < samples && out.launches < max_launches) {
        ++out.launches;
        Eigen::Index s = x;
        bool alive = true;
        if (steps >= 0) {
            for (Eigen::Index k = 0; k < steps && alive; ++k) {
                embedded_step(dyn, s, rng);
                alive = pos[static_cast<std::size_t>(s)] >= 0;
            }
        } else {
            double t = 0;
            while (alive) {
                const double q = dyn.total_rate(s);
                t += rng.exponential(q);
                if (t >= time) break;
                dyn.fire(s, rng.uniform() * q);
                alive = pos[static_cast<std::size_t>(s)] >= 0;
            }
        }
        if (alive) {
            out.distribution(pos[static_cast<std::size_t>(s)]) += 1;
            ++out.survivors;
        }
    }
    if (out.survivors == 0)
        throw ConvergenceError("no trajectory survived in W; use a smaller t or n");
    out.distribution /= static_cast<Scalar>(out.survivors);
    return out;
}

}  // namespace parrep
