#pragma once

// Shared fixtures for the test suites: the two reference interaction matrices
// used throughout, plus small random-matrix constructors with exact spectra
// (unimodular similarity transforms keep dyadic entries exact in doubles).

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <vector>

namespace testsup {

// 5x5 signed matrix with row sums 1; eigenvalues
// {1, 0.5708, -0.2346, 0.4319 +- 0.3270i}.
inline Eigen::MatrixXd matrix24() {
    Eigen::MatrixXd P(5, 5);
    P << 0.5, 0.3, 0.0, 0.3, -0.1,
        -0.1, 0.3, 0.3, 0.0, 0.5,
         0.0, 0.2, 0.4, 0.5, -0.1,
         0.1, 0.0, 0.6, 0.4, -0.1,
         0.1, -0.1, 0.1, 0.3, 0.6;
    return P;
}

// 4x4 signed matrix with P [1,1,2,2]^T = [1,1,2,2]^T; eigenvalues
// {1, 0.6, -0.1 +- 0.728i}.
inline Eigen::MatrixXd matrix25() {
    Eigen::MatrixXd P(4, 4);
    P << 0.3, 0.5, 0.5, -0.4,
         0.5, 0.3, -0.4, 0.5,
        -0.1, 0.5, 0.4, 0.4,
         0.5, -0.1, 0.4, 0.4;
    return P;
}

// Exact left eigenvector of matrix25() at eigenvalue 1, normalized so that
// pi^T [1,1,2,2]^T = 1 (verified by hand: the entries are dyadic rationals).
inline Eigen::VectorXd pi25() {
    Eigen::VectorXd pi(4);
    pi << 0.25, 0.25, 0.125, 0.125;
    return pi;
}

// Random unimodular integer matrix (det = +-1) with bounded entries, built
// as a product of integer shear matrices. Its inverse is integer too, so
// T * D * T^-1 is computed exactly for dyadic D.
inline Eigen::MatrixXd random_unimodular(int n, std::mt19937_64& rng, int shears = 6) {
    std::uniform_int_distribution<int> pick(0, n - 1);
    std::uniform_int_distribution<int> coef(-2, 2);
    Eigen::MatrixXd T = Eigen::MatrixXd::Identity(n, n);
    for (int k = 0; k < shears; ++k) {
        int i = pick(rng), j = pick(rng);
        if (i == j) continue;
        const double c = coef(rng);
        Eigen::MatrixXd S = Eigen::MatrixXd::Identity(n, n);
        S(i, j) = c;
        T = T * S;
        if (T.cwiseAbs().maxCoeff() > 64) {
            T = Eigen::MatrixXd::Identity(n, n); // restart if it grows too much
        }
    }
    return T;
}

inline Eigen::MatrixXd integer_inverse_of_unimodular(const Eigen::MatrixXd& T) {
    Eigen::MatrixXd inv = T.inverse();
    // round away the tiny fp noise: the true inverse is integer
    for (int i = 0; i < inv.rows(); ++i) {
        for (int j = 0; j < inv.cols(); ++j) {
            inv(i, j) = std::round(inv(i, j));
        }
    }
    return inv;
}

// Random row-stochastic matrix; entries dropped with probability `sparsity`
// (rows renormalized, at least one positive entry kept per row).
inline Eigen::MatrixXd random_row_stochastic(int n, std::mt19937_64& rng,
                                             double sparsity = 0.0) {
    std::uniform_real_distribution<double> unif(0.05, 1.0);
    std::bernoulli_distribution drop(sparsity);
    Eigen::MatrixXd P(n, n);
    for (int i = 0; i < n; ++i) {
        double sum = 0.0;
        for (int j = 0; j < n; ++j) {
            double v = unif(rng);
            if (drop(rng)) v = 0.0;
            P(i, j) = v;
            sum += v;
        }
        if (sum == 0.0) {
            P(i, i) = 1.0;
            sum = 1.0;
        }
        P.row(i) /= sum;
    }
    return P;
}

} // namespace testsup
