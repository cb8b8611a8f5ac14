#pragma once

#include "linsa/sa_engine.hpp"
#include "linsa/spectral.hpp"

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

namespace linsa {

enum class GainSign { NonNegative, NonPositive };
enum class Regime { ConvergesDeterministic, ConvergesRandomCritical, DivergesOrOscillates };

const char* to_string(GainSign sign);
const char* to_string(Regime regime);

/// Convergence classification of the mean system (P, u) under one gain sign,
/// with the matching result label, predicted limit and divergence sub-case.
struct ConvergenceVerdict {
    Regime regime = Regime::DivergesOrOscillates;
    GainSign gain_sign = GainSign::NonNegative;
    /// Which result applies: "deterministic-limit", "critical-limit",
    /// "non-convergent case I/II(a)/II(b)/II(c)".
    std::string applicable_result;
    std::optional<Eigen::VectorXd> expected_limit; // E of the limit when convergent
    bool limit_is_random = false; // true in the critical regime
    std::optional<double> rate_exponent; // filled by predicted_rate when a gain is known
    /// Set when a decision quantity sits within a factor of 2 of its
    /// tolerance threshold; the dichotomy is exact, floating point is not.
    bool borderline = false;
    std::string witness; // first violated clause for divergent verdicts
    double rho_max_re = 0.0;
    double rho_min_re = 0.0;
};

/// Exact convergence dichotomy for the configured gain sign:
/// non-negative gains converge iff rho_max < 1, or rho_max = 1 with the
/// critical-point input condition; non-positive gains mirror with rho_min.
/// The critical-regime expected limit depends on the initial state, so x0 is
/// an optional argument (defaults to the zero vector).
ConvergenceVerdict classify(const Eigen::MatrixXd& P, const Eigen::VectorXd& u,
                            GainSign gain_sign, double tol,
                            const std::optional<Eigen::VectorXd>& x0 = std::nullopt);

/// Expectation of the mean-square limit.
/// Deterministic regime: (I-P)^-1 u. Critical regime: Pi x0 + z where z is
/// the unique solution of (I-P) z = (I-Pi) u with Pi z = 0 (basis-free).
Eigen::VectorXd expected_limit(const Eigen::MatrixXd& P, const Eigen::VectorXd& u,
                               const Eigen::VectorXd& x0, GainSign gain_sign, double tol);

/// Predicted exponent of E||x(s) - x||^2 for a power-law gain: -gamma in the
/// strict regime, 1 - 2 gamma at the critical point. Throws NotApplicable
/// for non-convergent regimes or mismatched gain sign.
double predicted_rate(const Eigen::MatrixXd& P, const GainSchedule& gain, double tol);

struct GroupConsensusVerdict {
    bool reaches = false;
    std::string applicable_result;
    std::string witness;
    bool borderline = false;
};

/// Group consensus dichotomy (requires u = 0): non-negative gains reach
/// {S_i}-group consensus iff rho_max < 1, or rho_max = 1 with the eigenspace
/// inside the indicator span; non-positive gains mirror with rho_min.
GroupConsensusVerdict group_consensus_verdict(const Eigen::MatrixXd& P,
                                              const Eigen::VectorXd& u,
                                              const Partition& partition,
                                              GainSign gain_sign, double tol);

struct SpanningTreeResult {
    bool has_spanning_tree = false;
    std::optional<int> root;
};

/// Directed-spanning-tree test for a row-stochastic P: edge (j -> i) iff
/// P_ij > tol, i != j; true iff some root reaches every other node.
SpanningTreeResult spanning_tree(const Eigen::MatrixXd& P, double tol);

enum class NoiseProfile { NonDegenerateInput, DegenerateInput };

struct ArbitraryGainVerdict {
    bool convergible = false; // some real gain sequence reaches a deterministic vector
    std::string applicable_result;
    NoiseProfile profile = NoiseProfile::NonDegenerateInput;
};

/// Arbitrary-gain dichotomy: under the stated noise floors, some real gain
/// sequence drives x(s) to a deterministic vector != x(0) iff rho_max < 1 or
/// rho_min > 1.
ArbitraryGainVerdict arbitrary_gain_verdict(const Eigen::MatrixXd& P,
                                            const Eigen::VectorXd& u,
                                            NoiseProfile profile, double tol);

/// Unique fixed point of X = diag(lambda) P X C^T + (I - diag(lambda)) X0,
/// solved through the row-major vectorized linear system. Requires P, C
/// row-stochastic and 0 <= lambda < 1 entrywise.
Eigen::MatrixXd fj_fixed_point(const Eigen::VectorXd& lambda, const Eigen::MatrixXd& P,
                               const Eigen::MatrixXd& C, const Eigen::MatrixXd& X0,
                               double tol);

/// Reference iteration y_{s+1} = (1 - a_s) y_s + b_s run with equality;
/// property-test oracle for the diminishing-gain comparison lemma.
std::vector<double> deterministic_recursion_oracle(double y1,
                                                   const std::vector<double>& a,
                                                   const std::vector<double>& b, long S);

} // namespace linsa
