#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>

namespace linsa {

enum class NoiseKind {
    None,           // degenerate: every draw returns the means exactly
    IidEntrywise,   // independent zero-mean Gaussian noise per entry
    StateDependent, // u_i(s) = sum_j P_ij * (c * x_j) * w_ji(s), w ~ N(0, sigma_w^2)
};

const char* to_string(NoiseKind kind);

/// Seeded generator of random pairs (P(s), u(s)) with fixed conditional means
/// E[P(s)|x] = mean_P and E[u(s)|x] = mean_u. Draws are pure functions of
/// (seed, step, trial); distinct (step, trial) pairs use independent counter
/// substreams, so trials parallelize without locks.
struct MatrixEnsemble {
    Eigen::MatrixXd mean_P;
    Eigen::VectorXd mean_u;
    NoiseKind kind = NoiseKind::None;
    double sigma_P = 0.0;     // IidEntrywise: per-entry stddev of P noise
    double sigma_u = 0.0;     // IidEntrywise: per-entry stddev of u noise
    double state_scale = 0.0; // StateDependent: c in f_ji(x) = c * x_j
    double w_variance = 0.0;  // StateDependent: variance of edge noise w
    std::uint64_t seed = 0;

    int dim() const { return static_cast<int>(mean_P.rows()); }
    void validate() const; // throws InvalidInput / InvalidMatrix

    static MatrixEnsemble deterministic(Eigen::MatrixXd P, Eigen::VectorXd u);
    static MatrixEnsemble iid(Eigen::MatrixXd P, Eigen::VectorXd u, double sigma_P,
                              double sigma_u, std::uint64_t seed);
    static MatrixEnsemble state_dependent(Eigen::MatrixXd P, double noise_scale,
                                          double w_variance, std::uint64_t seed);
};

/// Draw (P(s), u(s)) for the given step/state/trial into preallocated storage
/// (hot path of the engine; no allocation).
void draw_into(const MatrixEnsemble& ensemble, long step, const Eigen::VectorXd& x,
               long trial, Eigen::MatrixXd& P_out, Eigen::VectorXd& u_out);

std::pair<Eigen::MatrixXd, Eigen::VectorXd>
draw(const MatrixEnsemble& ensemble, long step, const Eigen::VectorXd& x, long trial = 0);

/// Monte Carlo estimates certifying the configured ensemble's moments.
struct EnsembleMoments {
    Eigen::MatrixXd mean_P_hat;
    Eigen::MatrixXd stderr_P; // per-entry standard error
    Eigen::VectorXd mean_u_hat;
    Eigen::VectorXd stderr_u;
    double second_moment_P = 0.0; // estimate of E||P(s)||_F^2
    double second_moment_u = 0.0; // estimate of E||u(s)||_2^2
    double min_u_variance = 0.0;  // min_k Var(u_k); noise floor for arbitrary-gain results
    long n_samples = 0;
};

EnsembleMoments empirical_moments(const MatrixEnsemble& ensemble,
                                  const Eigen::VectorXd& x, long n_samples);

/// One random matrix sequence M(s) with E[M(s)] = mean and i.i.d. Gaussian
/// entry noise; building block for matrix-state systems.
struct MatrixSequence {
    Eigen::MatrixXd mean;
    double sigma = 0.0;
};

void draw_matrix_into(const MatrixSequence& seq, std::uint64_t seed,
                      std::uint64_t stream, long step, long trial,
                      Eigen::MatrixXd& out);

} // namespace linsa
