#include "linsa/analysis.hpp"

#include "linsa/errors.hpp"

#include <cmath>
#include <deque>
#include <sstream>

namespace linsa {

const char* to_string(GainSign sign) {
    return sign == GainSign::NonNegative ? "non-negative" : "non-positive";
}

const char* to_string(Regime regime) {
    switch (regime) {
    case Regime::ConvergesDeterministic: return "ConvergesDeterministic";
    case Regime::ConvergesRandomCritical: return "ConvergesRandomCritical";
    case Regime::DivergesOrOscillates: return "DivergesOrOscillates";
    }
    return "?";
}

namespace {

// Within a factor of 2 of the decision threshold on either side.
bool near_threshold(double quantity, double threshold) {
    const double q = std::abs(quantity);
    return q > 0.5 * threshold && q < 2.0 * threshold;
}

Eigen::VectorXd solve_deterministic_limit(const Eigen::MatrixXd& P,
                                          const Eigen::VectorXd& u, double tol) {
    const int n = static_cast<int>(P.rows());
    const Eigen::MatrixXd A = Eigen::MatrixXd::Identity(n, n) - P;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
    lu.setThreshold(tol);
    if (lu.rank() < n) {
        throw NumericalFailure("I - P is singular; deterministic limit undefined");
    }
    return lu.solve(u);
}

// Critical regime: limit expectation = Pi x0 + z with (I-P) z = (I-Pi) u and
// Pi z = 0. Solved basis-free through the stacked system [(I-P); W] z = [(I-Pi)u; 0],
// which is square-rank n exactly when the eigenvalue-1 eigenspace is non-defective.
Eigen::VectorXd solve_critical_limit(const Eigen::MatrixXd& P, const Eigen::VectorXd& u,
                                     const Eigen::VectorXd& x0,
                                     const SpectralSummary& summary) {
    const int n = static_cast<int>(P.rows());
    const Eigen::MatrixXd Pi = projector_one(summary);
    const int r = summary.geo_mult_one;

    Eigen::MatrixXd stacked(n + r, n);
    stacked.topRows(n) = Eigen::MatrixXd::Identity(n, n) - P;
    stacked.bottomRows(r) = summary.left_one_basis;
    Eigen::VectorXd rhs(n + r);
    rhs.head(n) = u - Pi * u;
    rhs.tail(r).setZero();

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(stacked,
                                          Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd sigma = svd.singularValues();
    const double cond = sigma[0] / sigma[sigma.size() - 1];
    if (!(sigma[sigma.size() - 1] > 0.0) || cond > 1.0 / summary.tol) {
        std::ostringstream os;
        os << "restricted solve for the critical limit is ill-conditioned (cond = "
           << cond << ")";
        throw NumericalFailure(os.str());
    }
    const Eigen::VectorXd z = svd.solve(rhs);
    return Pi * x0 + z;
}

} // namespace

ConvergenceVerdict classify(const Eigen::MatrixXd& P, const Eigen::VectorXd& u,
                            GainSign gain_sign, double tol,
                            const std::optional<Eigen::VectorXd>& x0) {
    const SpectralSummary summary = analyze(P, tol);
    if (u.size() != summary.dim()) throw InvalidInput("classify: u dimension mismatch");
    const Eigen::VectorXd x_init =
        x0.value_or(Eigen::VectorXd::Zero(summary.dim()));
    if (x_init.size() != summary.dim()) throw InvalidInput("classify: x0 dimension mismatch");

    ConvergenceVerdict v;
    v.gain_sign = gain_sign;
    v.rho_max_re = summary.rho_max_re;
    v.rho_min_re = summary.rho_min_re;

    // The two gain signs share one code path: rho is the decisive extreme and
    // "inside" means the strictly convergent side of 1.
    const bool non_negative = gain_sign == GainSign::NonNegative;
    const double rho = non_negative ? summary.rho_max_re : summary.rho_min_re;
    const double margin = non_negative ? 1.0 - rho : rho - 1.0;

    v.borderline = near_threshold(margin, tol);

    if (margin > tol) {
        v.regime = Regime::ConvergesDeterministic;
        v.applicable_result = "deterministic-limit";
        v.expected_limit = solve_deterministic_limit(P, u, tol);
        v.limit_is_random = false;
        return v;
    }

    if (std::abs(margin) <= tol) {
        // Critical point: convergent iff the input-compatibility condition holds.
        const ConditionCheck a3 = check_a3(summary, u);
        if (a3.ok) {
            v.regime = Regime::ConvergesRandomCritical;
            v.applicable_result = "critical-limit";
            v.limit_is_random = true;
            v.expected_limit = solve_critical_limit(P, u, x_init, summary);
            // Decision quantities of the condition near their thresholds make
            // the verdict borderline rather than silently picked.
            for (int i = 0; i < summary.eigenvalues.size(); ++i) {
                const auto lam = summary.eigenvalues[i];
                if (near_threshold(std::abs(lam - std::complex<double>(1.0, 0.0)), tol)) {
                    v.borderline = true;
                }
            }
            if (summary.left_one_basis.rows() > 0) {
                const double worst = (summary.left_one_basis * u).cwiseAbs().maxCoeff();
                if (near_threshold(worst, tol * (1.0 + u.norm()))) v.borderline = true;
            }
            return v;
        }
        v.regime = Regime::DivergesOrOscillates;
        v.witness = a3.detail;
        if (near_threshold(a3.magnitude,
                           a3.clause == ConditionCheck::Clause::LeftEigenvectorInput
                               ? tol * (1.0 + u.norm())
                               : tol)) {
            v.borderline = true;
        }
        switch (a3.clause) {
        case ConditionCheck::Clause::UnitRealPartComplex:
            v.applicable_result = "non-convergent case II(a)";
            break;
        case ConditionCheck::Clause::DefectiveMultiplicity:
            v.applicable_result = "non-convergent case II(b)";
            break;
        case ConditionCheck::Clause::LeftEigenvectorInput:
            v.applicable_result = "non-convergent case II(c)";
            break;
        default:
            v.applicable_result = "non-convergent case II";
            break;
        }
        return v;
    }

    v.regime = Regime::DivergesOrOscillates;
    v.applicable_result = "non-convergent case I";
    {
        std::ostringstream os;
        os << (non_negative ? "rho_max" : "rho_min") << " = " << rho
           << " lies strictly on the divergent side of 1";
        v.witness = os.str();
    }
    return v;
}

Eigen::VectorXd expected_limit(const Eigen::MatrixXd& P, const Eigen::VectorXd& u,
                               const Eigen::VectorXd& x0, GainSign gain_sign, double tol) {
    const ConvergenceVerdict v = classify(P, u, gain_sign, tol, x0);
    if (v.regime == Regime::DivergesOrOscillates) {
        throw NotApplicable("expected_limit: system is not mean-square convergent (" +
                            v.applicable_result + ")");
    }
    return *v.expected_limit;
}

double predicted_rate(const Eigen::MatrixXd& P, const GainSchedule& gain, double tol) {
    if (gain.kind != GainSchedule::Kind::PowerLaw) {
        throw NotApplicable("predicted_rate: gain schedule must be power-law");
    }
    const GainSign sign = gain.sign > 0 ? GainSign::NonNegative : GainSign::NonPositive;
    const Eigen::VectorXd u0 = Eigen::VectorXd::Zero(P.rows());
    const SpectralSummary summary = analyze(P, tol);
    const double rho = sign == GainSign::NonNegative ? summary.rho_max_re
                                                     : summary.rho_min_re;
    const double margin = sign == GainSign::NonNegative ? 1.0 - rho : rho - 1.0;
    if (margin > tol) {
        return -gain.gamma;
    }
    if (std::abs(margin) <= tol) {
        return 1.0 - 2.0 * gain.gamma;
    }
    throw NotApplicable("predicted_rate: non-convergent regime for this gain sign");
}

GroupConsensusVerdict group_consensus_verdict(const Eigen::MatrixXd& P,
                                              const Eigen::VectorXd& u,
                                              const Partition& partition,
                                              GainSign gain_sign, double tol) {
    const SpectralSummary summary = analyze(P, tol);
    if (u.size() != summary.dim()) {
        throw InvalidInput("group_consensus_verdict: u dimension mismatch");
    }
    partition.validate(summary.dim());
    if (u.cwiseAbs().maxCoeff() > tol) {
        throw PreconditionViolated("group consensus results require u = 0");
    }

    GroupConsensusVerdict gv;
    const bool non_negative = gain_sign == GainSign::NonNegative;
    const double rho = non_negative ? summary.rho_max_re : summary.rho_min_re;
    const double margin = non_negative ? 1.0 - rho : rho - 1.0;
    gv.borderline = near_threshold(margin, tol);

    if (margin > tol) {
        gv.reaches = true;
        gv.applicable_result = "strict contraction (common limit 0)";
        return gv;
    }
    if (std::abs(margin) <= tol) {
        const ConditionCheck a3 = check_a3(summary, u);
        if (!a3.ok) {
            gv.reaches = false;
            gv.applicable_result = "not mean-square convergent";
            gv.witness = a3.detail;
            return gv;
        }
        const ConditionCheck a5 = check_a5(summary, partition);
        gv.reaches = a5.ok;
        gv.applicable_result = a5.ok ? "critical point, eigenspace in indicator span"
                                     : "eigenspace escapes the group pattern";
        gv.witness = a5.detail;
        return gv;
    }
    gv.reaches = false;
    gv.applicable_result = "not mean-square convergent";
    {
        std::ostringstream os;
        os << (non_negative ? "rho_max" : "rho_min") << " = " << rho
           << " on the divergent side of 1";
        gv.witness = os.str();
    }
    return gv;
}

SpanningTreeResult spanning_tree(const Eigen::MatrixXd& P, double tol) {
    if (P.rows() != P.cols() || P.rows() == 0 || !P.allFinite()) {
        throw InvalidMatrix("spanning_tree: matrix must be finite and square");
    }
    const int n = static_cast<int>(P.rows());
    for (int i = 0; i < n; ++i) {
        if (std::abs(P.row(i).sum() - 1.0) > tol * std::max(1.0, P.cwiseAbs().maxCoeff()) ||
            P.row(i).minCoeff() < -tol) {
            throw PreconditionViolated("spanning_tree: P must be row-stochastic");
        }
    }

    // Edge (j -> i) iff P_ij > tol: agent i listens to agent j.
    std::vector<std::vector<int>> out(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (i != j && P(i, j) > tol) out[j].push_back(i);
        }
    }

    SpanningTreeResult res;
    std::vector<char> reached(n);
    for (int root = 0; root < n; ++root) {
        std::fill(reached.begin(), reached.end(), 0);
        std::deque<int> queue{root};
        reached[root] = 1;
        int count = 1;
        while (!queue.empty()) {
            const int v = queue.front();
            queue.pop_front();
            for (int w : out[v]) {
                if (!reached[w]) {
                    reached[w] = 1;
                    ++count;
                    queue.push_back(w);
                }
            }
        }
        if (count == n) {
            res.has_spanning_tree = true;
            res.root = root;
            return res;
        }
    }
    return res;
}

ArbitraryGainVerdict arbitrary_gain_verdict(const Eigen::MatrixXd& P,
                                            const Eigen::VectorXd& u,
                                            NoiseProfile profile, double tol) {
    const SpectralSummary summary = analyze(P, tol);
    if (u.size() != summary.dim()) {
        throw InvalidInput("arbitrary_gain_verdict: u dimension mismatch");
    }
    ArbitraryGainVerdict v;
    v.profile = profile;
    v.convergible =
        summary.rho_max_re < 1.0 - tol || summary.rho_min_re > 1.0 + tol;
    if (v.convergible) {
        v.applicable_result = summary.rho_max_re < 1.0 - tol
                                  ? "deterministic limit with non-negative gains"
                                  : "deterministic limit with non-positive gains";
    } else {
        v.applicable_result = profile == NoiseProfile::NonDegenerateInput
                                  ? "no gain sequence converges (input noise floor)"
                                  : "no gain sequence converges (matrix noise floor)";
    }
    return v;
}

Eigen::MatrixXd fj_fixed_point(const Eigen::VectorXd& lambda, const Eigen::MatrixXd& P,
                               const Eigen::MatrixXd& C, const Eigen::MatrixXd& X0,
                               double tol) {
    const int n = static_cast<int>(P.rows());
    const int m = static_cast<int>(C.rows());
    if (P.cols() != n || C.cols() != m || X0.rows() != n || X0.cols() != m ||
        lambda.size() != n) {
        throw InvalidInput("fj_fixed_point: dimension mismatch");
    }
    for (int i = 0; i < n; ++i) {
        if (!(lambda[i] >= 0.0 && lambda[i] < 1.0)) {
            throw PreconditionViolated("fj_fixed_point: susceptibilities must lie in [0, 1)");
        }
    }
    auto require_row_stochastic = [&](const Eigen::MatrixXd& M, const char* name) {
        for (int i = 0; i < M.rows(); ++i) {
            if (std::abs(M.row(i).sum() - 1.0) > tol * std::max(1.0, M.cwiseAbs().maxCoeff()) ||
                M.row(i).minCoeff() < -tol) {
                throw PreconditionViolated(std::string("fj_fixed_point: ") + name +
                                           " must be row-stochastic");
            }
        }
    };
    require_row_stochastic(P, "P");
    require_row_stochastic(C, "C");

    // Row-major vectorization y_{(i-1)m+j} = X_ij turns
    // X = (Lam P) X C^T + (I - Lam) X0 into (I - (Lam P) (x) C) y = vec(rhs).
    const Eigen::MatrixXd LP = lambda.asDiagonal() * P;
    const int nm = n * m;
    Eigen::MatrixXd system = Eigen::MatrixXd::Identity(nm, nm);
    for (int i = 0; i < n; ++i) {
        for (int k = 0; k < n; ++k) {
            system.block(i * m, k * m, m, m) -= LP(i, k) * C;
        }
    }
    Eigen::MatrixXd rhs_mat =
        (Eigen::VectorXd::Ones(n) - lambda).asDiagonal() * X0;
    Eigen::VectorXd rhs(nm);
    for (int i = 0; i < n; ++i) {
        rhs.segment(i * m, m) = rhs_mat.row(i).transpose();
    }

    Eigen::FullPivLU<Eigen::MatrixXd> lu(system);
    lu.setThreshold(tol);
    if (lu.rank() < nm) {
        throw NumericalFailure("fj_fixed_point: vectorized system is singular");
    }
    const Eigen::VectorXd y = lu.solve(rhs);

    Eigen::MatrixXd X(n, m);
    for (int i = 0; i < n; ++i) {
        X.row(i) = y.segment(i * m, m).transpose();
    }
    return X;
}

std::vector<double> deterministic_recursion_oracle(double y1, const std::vector<double>& a,
                                                   const std::vector<double>& b, long S) {
    if (y1 < 0.0) throw InvalidInput("recursion oracle: y1 must be >= 0");
    if (static_cast<long>(a.size()) < S || static_cast<long>(b.size()) < S) {
        throw InvalidInput("recursion oracle: sequences shorter than S");
    }
    std::vector<double> y;
    y.reserve(static_cast<size_t>(S) + 1);
    y.push_back(y1);
    double cur = y1;
    for (long s = 0; s < S; ++s) {
        const double as = a[static_cast<size_t>(s)];
        const double bs = b[static_cast<size_t>(s)];
        if (!(as >= 0.0 && as < 1.0)) throw InvalidInput("recursion oracle: a_s outside [0,1)");
        if (bs < 0.0) throw InvalidInput("recursion oracle: b_s negative");
        cur = (1.0 - as) * cur + bs;
        y.push_back(cur);
    }
    return y;
}

} // namespace linsa
