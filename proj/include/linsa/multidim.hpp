#pragma once

#include "linsa/ensembles.hpp"
#include "linsa/mc_harness.hpp"
#include "linsa/sa_engine.hpp"

#include <Eigen/Dense>
#include <cstdint>

namespace linsa {

/// Vector view of the matrix-state system: Q = P (x) C (Kronecker product)
/// and v = row-major vectorization of U, so y_{(i-1)m+j} = X_ij.
struct LiftedSystem {
    Eigen::MatrixXd Q; // nm x nm
    Eigen::VectorXd v; // nm
    int n = 0;
    int m = 0;
};

Eigen::MatrixXd kronecker(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B);

/// Row-major (agent-major, topic-minor) vectorization and its inverse.
Eigen::VectorXd vec_rowmajor(const Eigen::MatrixXd& X);
Eigen::MatrixXd unvec_rowmajor(const Eigen::VectorXd& y, int n, int m);

LiftedSystem lift(const Eigen::MatrixXd& P, const Eigen::MatrixXd& C,
                  const Eigen::MatrixXd& U);

/// Stochastic-approximation Friedkin-Johnsen scenario:
/// X(s+1) = (1-a) X(s) + a [ Lam(s) P(s) X(s) C(s)^T + (I - Lam(s)) X0 ]
/// with independent noise on the susceptibilities (diagonal), the influence
/// matrix P and the interdependency matrix C.
struct FjScenario {
    Eigen::VectorXd lambda; // mean susceptibilities, in [0, 1)
    Eigen::MatrixXd P;      // mean influence matrix, row-stochastic
    Eigen::MatrixXd C;      // mean interdependency matrix, row-stochastic
    Eigen::MatrixXd X0;
    double sigma_lambda = 0.0;
    double sigma_P = 0.0;
    double sigma_C = 0.0;
    std::uint64_t seed = 0;
    GainSchedule gain;
    long steps = 0;

    Eigen::MatrixXd fixed_point;   // predicted limit
    double lifted_rho_max = 0.0;   // rho_max of (Lam P) (x) C, must be < 1

    int n() const { return static_cast<int>(P.rows()); }
    int m() const { return static_cast<int>(C.rows()); }
};

/// Validates the hypotheses (row-stochastic means, 0 <= lambda < 1), computes
/// the fixed point and asserts rho_max((Lam P) (x) C) < 1 numerically.
/// Throws PreconditionViolated on hypothesis failure.
FjScenario make_fj_scenario(const Eigen::VectorXd& lambda, const Eigen::MatrixXd& P,
                            const Eigen::MatrixXd& C, const Eigen::MatrixXd& X0,
                            double sigma_lambda, double sigma_P, double sigma_C,
                            std::uint64_t seed, const GainSchedule& gain, long steps);

/// Per-step draw of (Lam(s) P(s), C(s), (I - Lam(s)) X0) for the engine.
MatrixDrawFn fj_draw_fn(const FjScenario& scenario);

/// One FJ trajectory (thinned), deterministic given (seed, trial).
MatrixTrajectory run_fj(const FjScenario& scenario, long record_every = 1, long trial = 0);

/// Monte Carlo mse of the FJ state against the predicted fixed point.
/// Trials parallelize exactly like the vector harness.
TrajectoryStats estimate_fj(const FjScenario& scenario, const std::vector<long>& checkpoints,
                            long n_trials);

} // namespace linsa
