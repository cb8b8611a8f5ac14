#include "linsa/multidim.hpp"

#include "linsa/analysis.hpp"
#include "linsa/errors.hpp"
#include "linsa/rng.hpp"
#include "linsa/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace linsa {

Eigen::MatrixXd kronecker(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
    Eigen::MatrixXd K(A.rows() * B.rows(), A.cols() * B.cols());
    for (int i = 0; i < A.rows(); ++i) {
        for (int j = 0; j < A.cols(); ++j) {
            K.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
        }
    }
    return K;
}

Eigen::VectorXd vec_rowmajor(const Eigen::MatrixXd& X) {
    Eigen::VectorXd y(X.size());
    for (int i = 0; i < X.rows(); ++i) {
        y.segment(i * X.cols(), X.cols()) = X.row(i).transpose();
    }
    return y;
}

Eigen::MatrixXd unvec_rowmajor(const Eigen::VectorXd& y, int n, int m) {
    if (y.size() != static_cast<long>(n) * m) {
        throw InvalidInput("unvec: length does not match n*m");
    }
    Eigen::MatrixXd X(n, m);
    for (int i = 0; i < n; ++i) {
        X.row(i) = y.segment(i * m, m).transpose();
    }
    return X;
}

LiftedSystem lift(const Eigen::MatrixXd& P, const Eigen::MatrixXd& C,
                  const Eigen::MatrixXd& U) {
    if (P.rows() != P.cols() || C.rows() != C.cols() || U.rows() != P.rows() ||
        U.cols() != C.rows()) {
        throw InvalidInput("lift: dimension mismatch");
    }
    if (!P.allFinite() || !C.allFinite() || !U.allFinite()) {
        throw InvalidMatrix("lift: inputs must be finite");
    }
    LiftedSystem sys;
    sys.n = static_cast<int>(P.rows());
    sys.m = static_cast<int>(C.rows());
    sys.Q = kronecker(P, C);
    sys.v = vec_rowmajor(U);
    return sys;
}

FjScenario make_fj_scenario(const Eigen::VectorXd& lambda, const Eigen::MatrixXd& P,
                            const Eigen::MatrixXd& C, const Eigen::MatrixXd& X0,
                            double sigma_lambda, double sigma_P, double sigma_C,
                            std::uint64_t seed, const GainSchedule& gain, long steps) {
    FjScenario sc;
    sc.lambda = lambda;
    sc.P = P;
    sc.C = C;
    sc.X0 = X0;
    sc.sigma_lambda = sigma_lambda;
    sc.sigma_P = sigma_P;
    sc.sigma_C = sigma_C;
    sc.seed = seed;
    sc.gain = gain;
    sc.steps = steps;
    if (sigma_lambda < 0.0 || sigma_P < 0.0 || sigma_C < 0.0) {
        throw PreconditionViolated("fj scenario: noise sigmas must be non-negative");
    }
    if (steps < 1) throw InvalidInput("fj scenario: steps must be >= 1");
    gain.validate();
    if (!gain.non_negative()) {
        throw PreconditionViolated("fj scenario: gain sequence must be non-negative");
    }

    const double tol = default_tol(P);
    // fj_fixed_point re-validates row-stochasticity and the lambda range.
    sc.fixed_point = fj_fixed_point(lambda, P, C, X0, tol);

    const Eigen::MatrixXd lifted = kronecker(lambda.asDiagonal() * P, C);
    sc.lifted_rho_max = analyze(lifted, default_tol(lifted)).rho_max_re;
    if (!(sc.lifted_rho_max < 1.0)) {
        throw PreconditionViolated("fj scenario: lifted system is not a strict contraction");
    }
    return sc;
}

MatrixDrawFn fj_draw_fn(const FjScenario& scenario) {
    const int n = scenario.n();
    return [scenario, n](long s, long trial, Eigen::MatrixXd& A, Eigen::MatrixXd& C,
                         Eigen::MatrixXd& U) {
        Eigen::VectorXd lam = scenario.lambda;
        if (scenario.sigma_lambda > 0.0) {
            Substream rs(scenario.seed, stream_tag::lambda_noise,
                         static_cast<std::uint64_t>(trial), static_cast<std::uint64_t>(s));
            for (int i = 0; i < n; ++i) lam[i] += scenario.sigma_lambda * rs.next_normal();
        }
        Eigen::MatrixXd P_s;
        draw_matrix_into({scenario.P, scenario.sigma_P}, scenario.seed,
                         stream_tag::matrix_noise, s, trial, P_s);
        draw_matrix_into({scenario.C, scenario.sigma_C}, scenario.seed,
                         stream_tag::coupling_noise, s, trial, C);
        A = lam.asDiagonal() * P_s;
        U = (Eigen::VectorXd::Ones(n) - lam).asDiagonal() * scenario.X0;
    };
}

MatrixTrajectory run_fj(const FjScenario& scenario, long record_every, long trial) {
    return run_matrix_with(scenario.X0, scenario.gain, fj_draw_fn(scenario),
                           scenario.steps, record_every, trial);
}

namespace {

int fj_threads() {
#ifdef _OPENMP
    if (const char* env = std::getenv("LINSA_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    return omp_get_max_threads();
#else
    return 1;
#endif
}

} // namespace

TrajectoryStats estimate_fj(const FjScenario& scenario, const std::vector<long>& checkpoints,
                            long n_trials) {
    if (n_trials < 2) throw InvalidInput("estimate_fj: n_trials must be >= 2");
    std::vector<long> cks = checkpoints;
    cks.push_back(scenario.steps);
    std::sort(cks.begin(), cks.end());
    cks.erase(std::unique(cks.begin(), cks.end()), cks.end());
    if (cks.front() < 0 || cks.back() > scenario.steps) {
        throw InvalidInput("estimate_fj: checkpoints must lie in [0, S]");
    }

    struct Rec {
        std::vector<double> err;
        bool diverged = false;
    };
    std::vector<Rec> recs(static_cast<size_t>(n_trials));
    const MatrixDrawFn draw = fj_draw_fn(scenario);

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(fj_threads())
#endif
    for (long t = 0; t < n_trials; ++t) {
        Rec rec;
        rec.err.resize(cks.size(), std::numeric_limits<double>::quiet_NaN());
        Eigen::MatrixXd X = scenario.X0;
        const long n = X.rows(), m = X.cols();
        Eigen::MatrixXd A(n, n), C(m, m), U(n, m), AX(n, m), mapped(n, m);
        size_t next = 0;
        if (cks[next] == 0) rec.err[next++] = (X - scenario.fixed_point).squaredNorm();
        for (long s = 0; s < scenario.steps && next < cks.size(); ++s) {
            const double a = scenario.gain.at(s);
            draw(s, t, A, C, U);
            AX.noalias() = A * X;
            mapped.noalias() = AX * C.transpose();
            mapped += U;
            X = (1.0 - a) * X + a * mapped;
            if (!X.allFinite() || X.cwiseAbs().maxCoeff() > kDivergenceGuard) {
                rec.diverged = true;
                break;
            }
            if (cks[next] == s + 1) {
                rec.err[next++] = (X - scenario.fixed_point).squaredNorm();
            }
        }
        recs[static_cast<size_t>(t)] = std::move(rec);
    }

    TrajectoryStats stats;
    stats.checkpoints = cks;
    stats.n_trials = n_trials;
    stats.ref_mode_used = ReferenceMode::FixedLimit;
    stats.fixed_reference = vec_rowmajor(scenario.fixed_point);
    stats.mse.assign(cks.size(), 0.0);
    stats.mse_stderr.assign(cks.size(), 0.0);
    stats.gap.assign(cks.size(), 0.0);

    long live = 0;
    for (const auto& r : recs) {
        if (r.diverged) ++stats.diverged_trials;
        else ++live;
    }
    if (live == 0) {
        stats.all_diverged = true;
        stats.mse.assign(cks.size(), std::numeric_limits<double>::quiet_NaN());
        return stats;
    }
    for (size_t k = 0; k < cks.size(); ++k) {
        const double N = static_cast<double>(live);
        double sum = 0.0;
        for (const auto& r : recs) {
            if (!r.diverged) sum += r.err[k];
        }
        stats.mse[k] = sum / N;
        if (live > 1) {
            double ss = 0.0;
            for (const auto& r : recs) {
                if (r.diverged) continue;
                const double d = r.err[k] - stats.mse[k];
                ss += d * d;
            }
            stats.mse_stderr[k] = std::sqrt(ss / (N - 1.0) / N);
        }
    }
    return stats;
}

} // namespace linsa
