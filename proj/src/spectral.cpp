#include "linsa/spectral.hpp"

#include "linsa/errors.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

namespace linsa {

namespace {

void require_finite_square(const Eigen::MatrixXd& P) {
    if (P.rows() != P.cols() || P.rows() == 0) {
        throw InvalidMatrix("matrix must be square and non-empty");
    }
    if (!P.allFinite()) {
        throw InvalidMatrix("matrix has non-finite entries");
    }
}

std::string fmt_complex(std::complex<double> z) {
    std::ostringstream os;
    os << z.real();
    if (z.imag() >= 0) {
        os << "+" << z.imag() << "i";
    } else {
        os << z.imag() << "i";
    }
    return os.str();
}

} // namespace

double default_tol(const Eigen::MatrixXd& P) {
    const double scale = P.size() > 0 ? P.cwiseAbs().rowwise().sum().maxCoeff() : 1.0;
    return 1e-8 * std::max(1.0, scale);
}

SpectralSummary analyze(const Eigen::MatrixXd& P, double tol) {
    require_finite_square(P);
    if (!(tol > 0.0)) {
        throw InvalidInput("tol must be positive");
    }
    const int n = static_cast<int>(P.rows());

    Eigen::EigenSolver<Eigen::MatrixXd> solver(P, /*computeEigenvectors=*/false);
    if (solver.info() != Eigen::Success) {
        throw NumericalFailure("eigensolver did not converge");
    }

    SpectralSummary s;
    s.tol = tol;

    // Deterministic eigenvalue ordering: Re desc, Im desc, stable tie-break.
    Eigen::VectorXcd raw = solver.eigenvalues();
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        if (raw[a].real() != raw[b].real()) return raw[a].real() > raw[b].real();
        return raw[a].imag() > raw[b].imag();
    });
    s.eigenvalues.resize(n);
    for (int i = 0; i < n; ++i) s.eigenvalues[i] = raw[order[i]];

    s.rho_max_re = s.eigenvalues[0].real();
    s.rho_min_re = s.eigenvalues[n - 1].real();

    s.alg_mult_one = 0;
    for (int i = 0; i < n; ++i) {
        if (std::abs(s.eigenvalues[i] - std::complex<double>(1.0, 0.0)) <= tol) {
            ++s.alg_mult_one;
        }
    }

    if (s.alg_mult_one == 0) {
        // No eigenvalue cluster at 1: the eigenspace is empty. Skipping the
        // rank test keeps geo <= alg even for highly non-normal matrices.
        s.geo_mult_one = 0;
        s.right_one_basis.resize(n, 0);
        s.left_one_basis.resize(0, n);
        return s;
    }

    // Numerical rank of P - I via singular values; the null spaces give
    // orthonormal real bases of the right/left eigenvalue-1 eigenspaces.
    Eigen::MatrixXd shifted = P - Eigen::MatrixXd::Identity(n, n);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(shifted,
                                          Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::VectorXd sigma = svd.singularValues();
    const double sigma_max = sigma.size() > 0 ? sigma[0] : 0.0;
    int rank = 0;
    for (int i = 0; i < sigma.size(); ++i) {
        if (sigma[i] > tol * sigma_max) ++rank;
    }
    s.geo_mult_one = std::min(n - rank, s.alg_mult_one);

    s.right_one_basis = svd.matrixV().rightCols(s.geo_mult_one);
    s.left_one_basis = svd.matrixU().rightCols(s.geo_mult_one).transpose();
    return s;
}

SpectralSummary analyze(const Eigen::MatrixXd& P) {
    return analyze(P, default_tol(P));
}

const char* to_string(ConditionCheck::Clause clause) {
    switch (clause) {
    case ConditionCheck::Clause::None: return "none";
    case ConditionCheck::Clause::UnitRealPartComplex: return "unit-real-part-complex";
    case ConditionCheck::Clause::DefectiveMultiplicity: return "defective-multiplicity";
    case ConditionCheck::Clause::LeftEigenvectorInput: return "left-eigenvector-input";
    case ConditionCheck::Clause::MultiplicityExceedsGroups: return "multiplicity-exceeds-groups";
    case ConditionCheck::Clause::EigenvectorOutsideSpan: return "eigenvector-outside-span";
    }
    return "?";
}

ConditionCheck check_a3(const SpectralSummary& summary, const Eigen::VectorXd& u) {
    if (u.size() != summary.dim()) {
        throw InvalidInput("u has wrong dimension for this spectral summary");
    }
    const double tol = summary.tol;
    ConditionCheck res;

    // (i) any eigenvalue with real part 1 must equal 1
    for (int i = 0; i < summary.eigenvalues.size(); ++i) {
        const std::complex<double> lam = summary.eigenvalues[i];
        if (std::abs(lam.real() - 1.0) <= tol &&
            std::abs(lam - std::complex<double>(1.0, 0.0)) > tol) {
            res.ok = false;
            res.clause = ConditionCheck::Clause::UnitRealPartComplex;
            res.eigenvalue = lam;
            res.magnitude = std::abs(lam.imag());
            res.detail = "eigenvalue " + fmt_complex(lam) +
                         " has unit real part but is not equal to 1";
            return res;
        }
    }

    // (ii) eigenvalue 1 non-defective
    if (summary.alg_mult_one != summary.geo_mult_one) {
        res.ok = false;
        res.clause = ConditionCheck::Clause::DefectiveMultiplicity;
        res.eigenvalue = {1.0, 0.0};
        res.magnitude = static_cast<double>(summary.alg_mult_one - summary.geo_mult_one);
        res.detail = "eigenvalue 1 is defective: algebraic multiplicity " +
                     std::to_string(summary.alg_mult_one) + " vs geometric " +
                     std::to_string(summary.geo_mult_one);
        return res;
    }

    // (iii) xi^T u = 0 for every left eigenvector xi at eigenvalue 1
    if (summary.left_one_basis.rows() > 0) {
        const Eigen::VectorXd proj = summary.left_one_basis * u;
        int worst = 0;
        const double mag = proj.cwiseAbs().maxCoeff(&worst);
        if (mag > tol * (1.0 + u.norm())) {
            res.ok = false;
            res.clause = ConditionCheck::Clause::LeftEigenvectorInput;
            res.eigenvalue = {1.0, 0.0};
            res.index = worst;
            res.magnitude = mag;
            res.detail = "left eigenvector " + std::to_string(worst) +
                         " of eigenvalue 1 has |xi^T u| = " + std::to_string(mag);
            return res;
        }
    }

    res.ok = true;
    return res;
}

Partition Partition::trivial(int n) {
    Partition p;
    p.groups.emplace_back();
    p.groups.back().resize(n);
    std::iota(p.groups.back().begin(), p.groups.back().end(), 0);
    return p;
}

void Partition::validate(int n) const {
    if (groups.empty()) throw InvalidInput("partition must have at least one group");
    std::vector<int> seen(n, 0);
    for (const auto& g : groups) {
        if (g.empty()) throw InvalidInput("partition group is empty");
        for (int idx : g) {
            if (idx < 0 || idx >= n) {
                throw InvalidInput("partition index out of range: " + std::to_string(idx));
            }
            if (seen[idx]++) {
                throw InvalidInput("partition index repeated: " + std::to_string(idx));
            }
        }
    }
    for (int i = 0; i < n; ++i) {
        if (!seen[i]) throw InvalidInput("partition does not cover index " + std::to_string(i));
    }
}

Eigen::MatrixXd Partition::indicators(int n) const {
    validate(n);
    Eigen::MatrixXd ind = Eigen::MatrixXd::Zero(n, group_count());
    for (int g = 0; g < group_count(); ++g) {
        for (int idx : groups[g]) ind(idx, g) = 1.0;
    }
    return ind;
}

ConditionCheck check_a5(const SpectralSummary& summary, const Partition& partition) {
    const int n = summary.dim();
    const Eigen::MatrixXd ind = partition.indicators(n);
    const int r = summary.alg_mult_one;
    const int r_groups = partition.group_count();
    ConditionCheck res;

    if (r < 1 || r > r_groups || summary.alg_mult_one != summary.geo_mult_one) {
        res.ok = false;
        res.clause = ConditionCheck::Clause::MultiplicityExceedsGroups;
        res.magnitude = static_cast<double>(r);
        res.detail = "eigenvalue-1 multiplicity r = " + std::to_string(r) +
                     " (geo " + std::to_string(summary.geo_mult_one) +
                     ") must satisfy 1 <= r <= r' = " + std::to_string(r_groups);
        return res;
    }

    // Each basis vector of the eigenspace must lie in span(indicators):
    // least-squares residual per column, worst column is the witness.
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(ind);
    double worst_resid = 0.0;
    int worst_col = -1;
    for (int c = 0; c < summary.right_one_basis.cols(); ++c) {
        const Eigen::VectorXd col = summary.right_one_basis.col(c);
        const Eigen::VectorXd coeff = qr.solve(col);
        const double resid = (col - ind * coeff).norm();
        if (resid > worst_resid) {
            worst_resid = resid;
            worst_col = c;
        }
        if (resid > summary.tol * std::max(col.norm(), 1e-300)) {
            res.ok = false;
            res.clause = ConditionCheck::Clause::EigenvectorOutsideSpan;
            res.index = c;
            res.magnitude = resid;
            res.detail = "right eigenvector " + std::to_string(c) +
                         " leaves the indicator span (residual " +
                         std::to_string(resid) + ")";
            return res;
        }
    }

    res.ok = true;
    res.index = worst_col;
    res.magnitude = worst_resid;
    return res;
}

Eigen::MatrixXd projector_one(const SpectralSummary& summary) {
    const int r = summary.alg_mult_one;
    if (r == 0) {
        throw EmptyEigenspace("eigenvalue 1 has empty eigenspace");
    }
    if (summary.geo_mult_one != r) {
        throw EmptyEigenspace("eigenvalue 1 is defective (geo < alg); no spectral projector");
    }
    const Eigen::MatrixXd& V = summary.right_one_basis; // n x r
    const Eigen::MatrixXd& W = summary.left_one_basis;  // r x n
    const Eigen::MatrixXd WV = W * V;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(WV);
    lu.setThreshold(summary.tol);
    if (lu.rank() < r) {
        throw NumericalFailure("left/right eigenbasis pairing W*V is singular");
    }
    return V * lu.solve(W);
}

} // namespace linsa
