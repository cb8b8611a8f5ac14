#pragma once

#include <Eigen/Dense>
#include <complex>
#include <string>
#include <vector>

namespace linsa {

/// Eigenstructure of the mean matrix P needed by the convergence theory:
/// real-part extremes, the eigenvalue-1 multiplicities, and orthonormal real
/// bases of the eigenvalue-1 right/left eigenspaces.
struct SpectralSummary {
    Eigen::VectorXcd eigenvalues; // sorted: Re desc, Im desc, stable on ties
    double rho_max_re = 0.0;      // max_i Re(lambda_i)
    double rho_min_re = 0.0;      // min_i Re(lambda_i)
    int alg_mult_one = 0;         // #{ |lambda - 1| <= tol }
    int geo_mult_one = 0;         // n - numerical rank of (P - I)
    // Orthonormal real bases of the eigenvalue-1 eigenspaces (geo_mult_one
    // columns/rows). Real bases always exist for real P; goldens must compare
    // projectors, not bases, since the basis itself is not canonical.
    Eigen::MatrixXd right_one_basis; // n x geo
    Eigen::MatrixXd left_one_basis;  // geo x n
    double tol = 0.0;

    int dim() const { return static_cast<int>(eigenvalues.size()); }
};

/// Default decision tolerance: 1e-8 * max(1, ||P||_inf).
double default_tol(const Eigen::MatrixXd& P);

/// Full eigenstructure analysis of a square real matrix.
/// Throws InvalidMatrix for non-finite/non-square input, NumericalFailure if
/// the eigensolver does not converge.
SpectralSummary analyze(const Eigen::MatrixXd& P, double tol);
SpectralSummary analyze(const Eigen::MatrixXd& P); // tol = default_tol(P)

/// Outcome of a condition check, with a witness naming the first violated
/// clause when the condition fails.
struct ConditionCheck {
    enum class Clause {
        None,                // condition holds
        UnitRealPartComplex, // eigenvalue with Re = 1 but lambda != 1
        DefectiveMultiplicity, // alg != geo multiplicity of eigenvalue 1
        LeftEigenvectorInput,  // some left eigenvector xi has xi^T u != 0
        MultiplicityExceedsGroups, // r outside [1, r']
        EigenvectorOutsideSpan,    // right eigenvector not in indicator span
    };
    bool ok = false;
    Clause clause = Clause::None;
    std::complex<double> eigenvalue{0.0, 0.0}; // offending eigenvalue, if any
    int index = -1;                            // offending basis column, if any
    double magnitude = 0.0; // size of the violation (|Im|, |xi^T u|, residual)
    std::string detail;

    explicit operator bool() const { return ok; }
};

const char* to_string(ConditionCheck::Clause clause);

/// Input-compatibility condition for convergence at the critical point:
/// (i) every eigenvalue with unit real part equals 1, (ii) eigenvalue 1 is
/// non-defective, (iii) u is orthogonal to all left eigenvectors at 1.
ConditionCheck check_a3(const SpectralSummary& summary, const Eigen::VectorXd& u);

/// Partition of agent indices {0..n-1} into non-empty disjoint groups.
struct Partition {
    std::vector<std::vector<int>> groups;

    static Partition trivial(int n); // single group {0..n-1}
    int group_count() const { return static_cast<int>(groups.size()); }
    /// n x r' 0/1 indicator matrix; validates coverage and disjointness.
    Eigen::MatrixXd indicators(int n) const;
    void validate(int n) const; // throws InvalidInput
};

/// Group-compatibility condition: the eigenvalue-1 right eigenspace lies in
/// the span of the partition's indicator vectors. Caller must have already
/// established clauses (i)-(ii) of the critical-point condition.
ConditionCheck check_a5(const SpectralSummary& summary, const Partition& partition);

/// Oblique spectral projector onto the eigenvalue-1 right eigenspace along
/// the complementary invariant subspace: Pi = V (W V)^-1 W.
/// Requires alg = geo = r >= 1; throws EmptyEigenspace / NumericalFailure.
Eigen::MatrixXd projector_one(const SpectralSummary& summary);

} // namespace linsa
