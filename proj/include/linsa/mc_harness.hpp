#pragma once

#include "linsa/analysis.hpp"
#include "linsa/ensembles.hpp"
#include "linsa/sa_engine.hpp"
#include "linsa/spectral.hpp"

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

namespace linsa {

/// How the per-trial limit x* in E||x(s) - x*||^2 is chosen.
enum class ReferenceMode {
    Auto,       // deterministic regime -> FixedLimit, otherwise TailProxy
    FixedLimit, // x* = theoretical expected limit (valid when the limit is deterministic)
    TailProxy,  // x* = per-trial x(S); biased by E||x(S) - x(inf)||^2, reported
};

const char* to_string(ReferenceMode mode);

/// Full simulation scenario for the vector system.
struct SimScenario {
    MatrixEnsemble ensemble;
    GainSchedule gain;
    Eigen::VectorXd x0;
    long steps = 0;
    std::optional<Partition> partition; // gap metric groups; default: one group
    ReferenceMode ref_mode = ReferenceMode::Auto;
    double tol = 0.0; // 0 -> default_tol(mean_P)
};

/// Monte Carlo estimates of the mean-square error curve and within-group gaps.
struct TrajectoryStats {
    std::vector<long> checkpoints;
    std::vector<double> mse;        // E||x(s) - x*||^2 per checkpoint
    std::vector<double> mse_stderr; // standard error over trials
    std::vector<double> gap;        // max within-group E|x_i - x_j|
    long n_trials = 0;
    long diverged_trials = 0;
    bool all_diverged = false;
    ReferenceMode ref_mode_used = ReferenceMode::Auto;
    std::optional<Eigen::VectorXd> fixed_reference;
    /// TailProxy only: mean and componentwise variance of x(S) across trials
    /// (the limit is random; its distribution has no theoretical target here).
    std::optional<Eigen::VectorXd> tail_mean;
    std::optional<Eigen::VectorXd> tail_variance;
};

/// Geometric checkpoint grid {1, 2, 4, ...} capped at S (S always included);
/// log-log rate fits want log-spaced abscissae.
std::vector<long> geometric_checkpoints(long S);

/// Estimate over n_trials independent trajectories. Trials run in parallel
/// (OpenMP) with disjoint RNG substreams; the reduction is a fixed-order pass
/// over trial index, so results are bit-identical to estimate_serial at any
/// thread count. Diverged trials are excluded from averages but counted.
TrajectoryStats estimate(const SimScenario& scenario, const std::vector<long>& checkpoints,
                         long n_trials);

/// Serial reference implementation (same contract, plain loop).
TrajectoryStats estimate_serial(const SimScenario& scenario,
                                const std::vector<long>& checkpoints, long n_trials);

struct RateFit {
    double exponent = 0.0;
    double stderr = 0.0;
    double r_squared = 0.0;
    int points = 0;
};

/// Least-squares slope of log(mse) vs log(s) over checkpoints inside
/// [window_lo, window_hi]. Needs >= 5 positive mse points in the window.
RateFit fit_rate(const TrajectoryStats& stats, double window_lo, double window_hi);

/// Matrix of E||x(s2) - x(s)||^2 estimates over the paired index lists:
/// the non-convergence witness (gaps bounded away from 0 in oscillatory
/// regimes, -> 0 for convergent ones).
Eigen::MatrixXd cauchy_gap(const SimScenario& scenario, const std::vector<long>& s_list,
                           const std::vector<long>& s2_list, long n_trials);

} // namespace linsa
