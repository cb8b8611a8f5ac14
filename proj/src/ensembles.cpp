#include "linsa/ensembles.hpp"

#include "linsa/errors.hpp"
#include "linsa/rng.hpp"

#include <cmath>

namespace linsa {

const char* to_string(NoiseKind kind) {
    switch (kind) {
    case NoiseKind::None: return "none";
    case NoiseKind::IidEntrywise: return "iid";
    case NoiseKind::StateDependent: return "state_dependent";
    }
    return "?";
}

void MatrixEnsemble::validate() const {
    if (mean_P.rows() != mean_P.cols() || mean_P.rows() == 0) {
        throw InvalidMatrix("ensemble mean_P must be square and non-empty");
    }
    if (!mean_P.allFinite() || !mean_u.allFinite()) {
        throw InvalidMatrix("ensemble means must be finite");
    }
    if (mean_u.size() != mean_P.rows()) {
        throw InvalidInput("ensemble mean_u dimension mismatch");
    }
    if (kind == NoiseKind::IidEntrywise && (sigma_P < 0.0 || sigma_u < 0.0)) {
        throw InvalidInput("iid noise stddevs must be non-negative");
    }
    if (kind == NoiseKind::StateDependent) {
        if (w_variance < 0.0) throw InvalidInput("w_variance must be non-negative");
        // The state-dependent edge noise has zero conditional mean, so the
        // ensemble mean input is 0 by construction.
        if (mean_u.cwiseAbs().maxCoeff() != 0.0) {
            throw InvalidInput("state-dependent ensembles require mean_u = 0");
        }
    }
}

MatrixEnsemble MatrixEnsemble::deterministic(Eigen::MatrixXd P, Eigen::VectorXd u) {
    MatrixEnsemble e;
    e.mean_P = std::move(P);
    e.mean_u = std::move(u);
    e.kind = NoiseKind::None;
    e.validate();
    return e;
}

MatrixEnsemble MatrixEnsemble::iid(Eigen::MatrixXd P, Eigen::VectorXd u, double sigma_P,
                                   double sigma_u, std::uint64_t seed) {
    MatrixEnsemble e;
    e.mean_P = std::move(P);
    e.mean_u = std::move(u);
    e.kind = NoiseKind::IidEntrywise;
    e.sigma_P = sigma_P;
    e.sigma_u = sigma_u;
    e.seed = seed;
    e.validate();
    return e;
}

MatrixEnsemble MatrixEnsemble::state_dependent(Eigen::MatrixXd P, double noise_scale,
                                               double w_variance, std::uint64_t seed) {
    MatrixEnsemble e;
    e.mean_P = std::move(P);
    e.mean_u = Eigen::VectorXd::Zero(e.mean_P.rows());
    e.kind = NoiseKind::StateDependent;
    e.state_scale = noise_scale;
    e.w_variance = w_variance;
    e.seed = seed;
    e.validate();
    return e;
}

void draw_into(const MatrixEnsemble& ensemble, long step, const Eigen::VectorXd& x,
               long trial, Eigen::MatrixXd& P_out, Eigen::VectorXd& u_out) {
    const int n = ensemble.dim();
    P_out = ensemble.mean_P;
    u_out = ensemble.mean_u;

    switch (ensemble.kind) {
    case NoiseKind::None:
        return;
    case NoiseKind::IidEntrywise: {
        if (ensemble.sigma_P > 0.0) {
            Substream rs(ensemble.seed, stream_tag::matrix_noise,
                         static_cast<std::uint64_t>(trial),
                         static_cast<std::uint64_t>(step));
            for (int i = 0; i < n; ++i) {
                for (int j = 0; j < n; ++j) {
                    P_out(i, j) += ensemble.sigma_P * rs.next_normal();
                }
            }
        }
        if (ensemble.sigma_u > 0.0) {
            Substream rs(ensemble.seed, stream_tag::input_noise,
                         static_cast<std::uint64_t>(trial),
                         static_cast<std::uint64_t>(step));
            for (int i = 0; i < n; ++i) {
                u_out[i] += ensemble.sigma_u * rs.next_normal();
            }
        }
        return;
    }
    case NoiseKind::StateDependent: {
        // u_i(s) = sum_j P_ij * f_ji(x) * w_ji(s), f_ji(x) = c * x_j.
        // w is drawn row-major in j (sender) then i (receiver).
        Substream rs(ensemble.seed, stream_tag::edge_noise,
                     static_cast<std::uint64_t>(trial),
                     static_cast<std::uint64_t>(step));
        const double sd = std::sqrt(ensemble.w_variance);
        u_out.setZero();
        for (int j = 0; j < n; ++j) {
            const double fj = ensemble.state_scale * x[j];
            for (int i = 0; i < n; ++i) {
                const double w = sd * rs.next_normal();
                u_out[i] += P_out(i, j) * fj * w;
            }
        }
        return;
    }
    }
}

std::pair<Eigen::MatrixXd, Eigen::VectorXd>
draw(const MatrixEnsemble& ensemble, long step, const Eigen::VectorXd& x, long trial) {
    if (!x.allFinite()) throw InvalidInput("state x must be finite");
    Eigen::MatrixXd P;
    Eigen::VectorXd u;
    draw_into(ensemble, step, x, trial, P, u);
    return {std::move(P), std::move(u)};
}

EnsembleMoments empirical_moments(const MatrixEnsemble& ensemble,
                                  const Eigen::VectorXd& x, long n_samples) {
    if (n_samples < 1) throw InvalidInput("n_samples must be >= 1");
    const int n = ensemble.dim();

    if (ensemble.kind == NoiseKind::None) {
        // Degenerate ensemble: every draw is the mean, no sampling error.
        EnsembleMoments m;
        m.n_samples = n_samples;
        m.mean_P_hat = ensemble.mean_P;
        m.mean_u_hat = ensemble.mean_u;
        m.stderr_P = Eigen::MatrixXd::Zero(n, n);
        m.stderr_u = Eigen::VectorXd::Zero(n);
        m.second_moment_P = ensemble.mean_P.squaredNorm();
        m.second_moment_u = ensemble.mean_u.squaredNorm();
        m.min_u_variance = 0.0;
        return m;
    }

    Eigen::MatrixXd sum_P = Eigen::MatrixXd::Zero(n, n);
    Eigen::MatrixXd sumsq_P = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd sum_u = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd sumsq_u = Eigen::VectorXd::Zero(n);
    double frob_P = 0.0, norm_u = 0.0;

    Eigen::MatrixXd P(n, n);
    Eigen::VectorXd u(n);
    for (long t = 0; t < n_samples; ++t) {
        // step 0, trial = sample index: each sample is its own substream
        draw_into(ensemble, 0, x, t, P, u);
        sum_P += P;
        sumsq_P += P.cwiseProduct(P);
        sum_u += u;
        sumsq_u += u.cwiseProduct(u);
        frob_P += P.squaredNorm();
        norm_u += u.squaredNorm();
    }

    EnsembleMoments m;
    m.n_samples = n_samples;
    const double N = static_cast<double>(n_samples);
    m.mean_P_hat = sum_P / N;
    m.mean_u_hat = sum_u / N;
    m.second_moment_P = frob_P / N;
    m.second_moment_u = norm_u / N;

    if (n_samples > 1) {
        const Eigen::MatrixXd var_P =
            (sumsq_P - N * m.mean_P_hat.cwiseProduct(m.mean_P_hat)) / (N - 1.0);
        const Eigen::VectorXd var_u =
            (sumsq_u - N * m.mean_u_hat.cwiseProduct(m.mean_u_hat)) / (N - 1.0);
        m.stderr_P = var_P.cwiseMax(0.0).cwiseSqrt() / std::sqrt(N);
        m.stderr_u = var_u.cwiseMax(0.0).cwiseSqrt() / std::sqrt(N);
        m.min_u_variance = var_u.cwiseMax(0.0).minCoeff();
    } else {
        m.stderr_P = Eigen::MatrixXd::Zero(n, n);
        m.stderr_u = Eigen::VectorXd::Zero(n);
        m.min_u_variance = 0.0;
    }
    return m;
}

void draw_matrix_into(const MatrixSequence& seq, std::uint64_t seed,
                      std::uint64_t stream, long step, long trial,
                      Eigen::MatrixXd& out) {
    out = seq.mean;
    if (seq.sigma <= 0.0) return;
    Substream rs(seed, stream, static_cast<std::uint64_t>(trial),
                 static_cast<std::uint64_t>(step));
    for (int i = 0; i < out.rows(); ++i) {
        for (int j = 0; j < out.cols(); ++j) {
            out(i, j) += seq.sigma * rs.next_normal();
        }
    }
}

} // namespace linsa
