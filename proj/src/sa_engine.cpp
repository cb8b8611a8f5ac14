#include "linsa/sa_engine.hpp"

#include "linsa/errors.hpp"
#include "linsa/rng.hpp"

#include <cmath>

namespace linsa {

GainSchedule GainSchedule::power_law(int sign, double alpha, double beta, double gamma) {
    GainSchedule g;
    g.kind = Kind::PowerLaw;
    g.sign = sign;
    g.alpha = alpha;
    g.beta = beta;
    g.gamma = gamma;
    g.validate();
    return g;
}

GainSchedule GainSchedule::harmonic() {
    GainSchedule g;
    g.kind = Kind::Harmonic;
    return g;
}

GainSchedule GainSchedule::custom(std::vector<double> values) {
    GainSchedule g;
    g.kind = Kind::Custom;
    g.values = std::move(values);
    return g;
}

void GainSchedule::validate() const {
    if (kind == Kind::PowerLaw) {
        if (sign != 1 && sign != -1) throw InvalidInput("power-law sign must be +1 or -1");
        if (!(alpha > 0.0)) throw InvalidInput("power-law alpha must be > 0");
        if (!(beta > 0.0)) throw InvalidInput("power-law beta must be > 0");
        if (!(gamma > 0.5 && gamma <= 1.0)) {
            throw InvalidInput("power-law gamma must lie in (1/2, 1]");
        }
    }
    if (kind == Kind::Custom && values.empty()) {
        throw InvalidInput("custom gain schedule is empty");
    }
}

double GainSchedule::at(long s) const {
    switch (kind) {
    case Kind::PowerLaw: {
        const double base = static_cast<double>(s) + beta;
        const double a = (gamma == 1.0) ? alpha / base : alpha / std::pow(base, gamma);
        return sign > 0 ? a : -a;
    }
    case Kind::Harmonic:
        return 1.0 / (static_cast<double>(s) + 1.0);
    case Kind::Custom:
        if (s < 0 || static_cast<size_t>(s) >= values.size()) {
            throw InvalidInput("custom gain schedule exhausted at step " + std::to_string(s));
        }
        return values[static_cast<size_t>(s)];
    }
    return 0.0;
}

bool GainSchedule::non_negative() const {
    switch (kind) {
    case Kind::PowerLaw: return sign > 0;
    case Kind::Harmonic: return true;
    case Kind::Custom:
        for (double v : values) {
            if (v < 0.0) return false;
        }
        return true;
    }
    return true;
}

Eigen::VectorXd step(const Eigen::VectorXd& x, double a, const Eigen::MatrixXd& P_s,
                     const Eigen::VectorXd& u_s) {
    if (P_s.rows() != P_s.cols() || P_s.rows() != x.size() || u_s.size() != x.size()) {
        throw InvalidInput("step: dimension mismatch");
    }
    return (1.0 - a) * x + a * (P_s * x + u_s);
}

namespace {

bool guard_tripped(const Eigen::VectorXd& x) {
    return !x.allFinite() || x.cwiseAbs().maxCoeff() > kDivergenceGuard;
}

bool guard_tripped(const Eigen::MatrixXd& X) {
    return !X.allFinite() || X.cwiseAbs().maxCoeff() > kDivergenceGuard;
}

} // namespace

Trajectory run(const Eigen::VectorXd& x0, const GainSchedule& schedule,
               const MatrixEnsemble& ensemble, long S, long record_every, long trial) {
    if (S < 1) throw InvalidInput("run: S must be >= 1");
    if (record_every < 1) throw InvalidInput("run: record_every must be >= 1");
    if (x0.size() != ensemble.dim()) throw InvalidInput("run: x0 dimension mismatch");
    ensemble.validate();
    schedule.validate();

    Trajectory traj;
    traj.steps.push_back(0);
    traj.states.push_back(x0);

    const int n = ensemble.dim();
    Eigen::VectorXd x = x0;
    Eigen::MatrixXd P_s(n, n);
    Eigen::VectorXd u_s(n), mapped(n);

    for (long s = 0; s < S; ++s) {
        const double a = schedule.at(s);
        draw_into(ensemble, s, x, trial, P_s, u_s);
        mapped.noalias() = P_s * x;
        mapped += u_s;
        x = (1.0 - a) * x + a * mapped;
        const long now = s + 1;
        if (guard_tripped(x)) {
            traj.diverged_at = now;
            break;
        }
        if (now % record_every == 0 || now == S) {
            traj.steps.push_back(now);
            traj.states.push_back(x);
        }
    }
    return traj;
}

MatrixTrajectory run_matrix_with(const Eigen::MatrixXd& X0, const GainSchedule& schedule,
                                 const MatrixDrawFn& draw_step, long S, long record_every,
                                 long trial) {
    if (S < 1) throw InvalidInput("run_matrix: S must be >= 1");
    if (record_every < 1) throw InvalidInput("run_matrix: record_every must be >= 1");
    schedule.validate();

    const long n = X0.rows();
    const long m = X0.cols();

    MatrixTrajectory traj;
    traj.steps.push_back(0);
    traj.states.push_back(X0);

    Eigen::MatrixXd X = X0;
    Eigen::MatrixXd A(n, n), C(m, m), U(n, m), AX(n, m), mapped(n, m);

    for (long s = 0; s < S; ++s) {
        const double a = schedule.at(s);
        draw_step(s, trial, A, C, U);
        if (A.rows() != n || A.cols() != n || C.rows() != m || C.cols() != m ||
            U.rows() != n || U.cols() != m) {
            throw InvalidInput("run_matrix: drawn system has wrong dimensions");
        }
        AX.noalias() = A * X;
        mapped.noalias() = AX * C.transpose();
        mapped += U;
        X = (1.0 - a) * X + a * mapped;
        const long now = s + 1;
        if (guard_tripped(X)) {
            traj.diverged_at = now;
            break;
        }
        if (now % record_every == 0 || now == S) {
            traj.steps.push_back(now);
            traj.states.push_back(X);
        }
    }
    return traj;
}

MatrixTrajectory run_matrix(const Eigen::MatrixXd& X0, const GainSchedule& schedule,
                            const MatrixSequence& P_seq, const MatrixSequence& C_seq,
                            const MatrixSequence& U_seq, std::uint64_t seed, long S,
                            long record_every, long trial) {
    const long n = X0.rows();
    const long m = X0.cols();
    if (P_seq.mean.rows() != n || P_seq.mean.cols() != n) {
        throw InvalidInput("run_matrix: P mean must be n x n");
    }
    if (C_seq.mean.rows() != m || C_seq.mean.cols() != m) {
        throw InvalidInput("run_matrix: C mean must be m x m");
    }
    if (U_seq.mean.rows() != n || U_seq.mean.cols() != m) {
        throw InvalidInput("run_matrix: U mean must be n x m");
    }
    auto drawer = [&](long s, long t, Eigen::MatrixXd& A, Eigen::MatrixXd& C,
                      Eigen::MatrixXd& U) {
        draw_matrix_into(P_seq, seed, stream_tag::matrix_noise, s, t, A);
        draw_matrix_into(C_seq, seed, stream_tag::coupling_noise, s, t, C);
        draw_matrix_into(U_seq, seed, stream_tag::input_noise, s, t, U);
    };
    return run_matrix_with(X0, schedule, drawer, S, record_every, trial);
}

} // namespace linsa
