#pragma once

// Networks and small chains used by the tests, the validation suite and the
// shipped data files.

#include <vector>

#include "parrep/net_model.hpp"

namespace parrep::fixtures {

/// 0 -> A, A -> B, B -> A, B -> C, C -> 0 with the two middle reactions fast.
inline ReactionNetwork linear_network(double c1 = 0.1, double c2 = 100, double c3 = 100, double c4 = 0.01,
                                      double c5 = 0.01) {
    std::vector<Reaction> rs{
        {ConstantRate{c1}, {1, 0, 0}},
        {LinearRate{c2, 0}, {-1, 1, 0}},
        {LinearRate{c3, 1}, {1, -1, 0}},
        {LinearRate{c4, 1}, {0, -1, 1}},
        {LinearRate{c5, 2}, {0, 0, -1}},
    };
    return {{"A", "B", "C"}, std::move(rs), {true, false, false, true, true}};
}

inline PopulationState linear_network_initial() { return {5, 10, 10}; }

/// S1 <-> S2, S1 <-> S3, 2 S2 + S3 <-> 3 S4; the last pair is fast.
inline ReactionNetwork nonlinear_network(double c1 = 0.1, double c2 = 0.1, double c3 = 0.1, double c4 = 0.1,
                                         double c5 = 2, double c6 = 2) {
    std::vector<Reaction> rs{
        {LinearRate{c1, 0}, {-1, 1, 0, 0}},
        {LinearRate{c2, 1}, {1, -1, 0, 0}},
        {LinearRate{c3, 0}, {-1, 0, 1, 0}},
        {LinearRate{c4, 2}, {1, 0, -1, 0}},
        {MassActionRate{c5, {{1, 2}, {2, 1}}}, {0, -2, -1, 3}},
        {MassActionRate{c6, {{3, 3}}}, {0, 2, 1, -3}},
    };
    return {{"S1", "S2", "S3", "S4"}, std::move(rs), {true, true, true, true, false, false}};
}

inline PopulationState nonlinear_network_initial() { return {3, 30, 30, 30}; }

/// 4-state generator, metastable in {0,1,2} for the CTMC but not for the jump chain.
inline Eigen::MatrixXd ctmc_metastable_generator(double eps = 1e-3) {
    Eigen::MatrixXd q(4, 4);
    q << -1, 0.5, 0.5, 0,
         0.5, -1, 0.5, 0,
         0, eps / 2, -eps, eps / 2,
         0, 0, 1, -1;
    return q;
}

/// 4-state generator, metastable in {0,1,2} for the jump chain but not for the CTMC.
inline Eigen::MatrixXd dtmc_metastable_generator(double eps = 1e-3) {
    const double inv = 1 / eps;
    Eigen::MatrixXd q(4, 4);
    q << -inv, inv / 2, inv / 2, 0,
         inv - 1, -inv, 1, 0,
         0, inv - 1, -inv, 1,
         0, 0, 1, -1;
    return q;
}

/// Six states, W = {0,1,2} with three distinct exit states 3,4,5, so that
/// exit-state laws are not degenerate.
inline Eigen::MatrixXd three_exit_generator() {
    Eigen::MatrixXd q = Eigen::MatrixXd::Zero(6, 6);
    q(0, 1) = 1;
    q(0, 2) = 1;
    q(0, 3) = 0.05;
    q(1, 0) = 1;
    q(1, 2) = 1;
    q(1, 4) = 0.05;
    q(2, 0) = 1;
    q(2, 1) = 1;
    q(2, 5) = 0.1;
    q(3, 0) = 1;
    q(4, 1) = 1;
    q(5, 2) = 1;
    for (Eigen::Index i = 0; i < 6; ++i) q(i, i) = -q.row(i).sum();
    return q;
}

inline std::vector<Eigen::Index> example_set() { return {0, 1, 2}; }

}  // namespace parrep::fixtures
