#include "parrep/qsd_oracle.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseLU>

namespace parrep {

Eigen::Index TruncatedNetworkChain::index_of(const PopulationState& x) const {
    Eigen::Index idx = 0;
    for (std::size_t i = x.size(); i-- > 0;) {
        if (x[i] < 0 || x[i] > cap) return -1;
        idx = idx * (cap + 1) + x[i];
    }
    return idx;
}

double TruncatedNetworkChain::boundary_mass(const Eigen::RowVectorXd& pi) const {
    double mass = 0;
    for (std::size_t k = 0; k < states.size(); ++k)
        for (auto c : states[k].counts)
            if (c == cap) {
                mass += pi(static_cast<Eigen::Index>(k));
                break;
            }
    return mass;
}

TruncatedNetworkChain truncate_network(const ReactionNetwork& net, Count cap) {
    if (cap < 1) throw InputError("truncation cap must be >= 1");
    const std::size_t d = net.species_count();
    double total = 1;
    for (std::size_t i = 0; i < d; ++i) total *= static_cast<double>(cap + 1);
    if (total > 5e6) throw InputError("truncated state space too large");

    TruncatedNetworkChain chain{{}, {}, cap};
    const auto n = static_cast<Eigen::Index>(total);
    chain.states.reserve(static_cast<std::size_t>(n));
    for (Eigen::Index k = 0; k < n; ++k) {
        PopulationState x{std::vector<Count>(d)};
        Eigen::Index rest = k;
        for (std::size_t i = 0; i < d; ++i) {
            x[i] = rest % (cap + 1);
            rest /= cap + 1;
        }
        chain.states.push_back(std::move(x));
    }

    std::vector<Eigen::Triplet<double>> entries;
    entries.reserve(static_cast<std::size_t>(n) * (net.reaction_count() + 1));
    std::vector<double> a(net.reaction_count());
    for (Eigen::Index k = 0; k < n; ++k) {
        const auto& x = chain.states[static_cast<std::size_t>(k)];
        propensities(net, x, a);
        double out = 0;
        for (std::size_t j = 0; j < a.size(); ++j) {
            if (a[j] <= 0) continue;
            PopulationState y = x;
            bool inside = true;
            for (std::size_t i = 0; i < d; ++i) {
                y[i] += net.reaction(j).state_change[i];
                inside = inside && y[i] >= 0 && y[i] <= cap;
            }
            if (!inside || y == x) continue;
            entries.emplace_back(k, chain.index_of(y), a[j]);
            out += a[j];
        }
        entries.emplace_back(k, k, -out);
    }
    chain.generator.resize(n, n);
    chain.generator.setFromTriplets(entries.begin(), entries.end());
    return chain;
}

Eigen::RowVectorXd stationary_distribution(const Eigen::SparseMatrix<double>& generator) {
    const Eigen::Index n = generator.rows();
    if (n != generator.cols() || n == 0) throw InputError("generator must be square");
    Eigen::SparseMatrix<double> a = generator.transpose();
    // replace the last balance equation by sum(pi) = 1
    std::vector<Eigen::Triplet<double>> entries;
    entries.reserve(static_cast<std::size_t>(a.nonZeros() + n));
    for (Eigen::Index col = 0; col < a.outerSize(); ++col)
        for (Eigen::SparseMatrix<double>::InnerIterator it(a, col); it; ++it)
            if (it.row() != n - 1) entries.emplace_back(it.row(), it.col(), it.value());
    for (Eigen::Index col = 0; col < n; ++col) entries.emplace_back(n - 1, col, 1.0);
    a.setFromTriplets(entries.begin(), entries.end());
    a.makeCompressed();

    Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
    b(n - 1) = 1;
    Eigen::RowVectorXd pi;
    {
        Eigen::BiCGSTAB<Eigen::SparseMatrix<double>, Eigen::IncompleteLUT<double>> it;
        it.preconditioner().setDroptol(1e-6);
        it.preconditioner().setFillfactor(20);
        it.setTolerance(1e-13);
        it.setMaxIterations(5000);
        it.compute(a);
        if (it.info() == Eigen::Success) {
            pi = it.solve(b).transpose();
            if (it.info() != Eigen::Success) pi.resize(0);
        }
    }
    if (pi.size() == 0) {
        // iterative solve failed; the direct factorization is slow but robust
        Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
        lu.compute(a);
        if (lu.info() != Eigen::Success)
            throw ReducibleError("stationary system is singular: " + lu.lastErrorMessage());
        pi = lu.solve(b).transpose();
        if (lu.info() != Eigen::Success) throw ReducibleError("stationary solve failed");
    }
    pi = pi.cwiseMax(0.0);
    return pi / pi.sum();
}

}  // namespace parrep
