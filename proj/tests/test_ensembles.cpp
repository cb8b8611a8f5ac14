#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "linsa/ensembles.hpp"
#include "linsa/errors.hpp"
#include "linsa/rng.hpp"
#include "test_support.hpp"

#include <cmath>

using namespace linsa;
using Eigen::MatrixXd;
using Eigen::VectorXd;

TEST_CASE("degenerate ensemble returns the means exactly") {
    const MatrixXd P = testsup::matrix24();
    VectorXd u(5);
    u << 1, 2, 3, 4, 5;
    const MatrixEnsemble ens = MatrixEnsemble::deterministic(P, u);
    const auto [Ps, us] = draw(ens, 17, VectorXd::Ones(5), 3);
    CHECK(Ps == P);
    CHECK(us == u);

    const EnsembleMoments m = empirical_moments(ens, VectorXd::Zero(5), 100);
    CHECK((m.mean_P_hat - P).cwiseAbs().maxCoeff() == 0.0);
    CHECK(m.stderr_P.maxCoeff() == 0.0);
    CHECK(m.min_u_variance == 0.0);
}

TEST_CASE("iid ensemble sample mean obeys the law-of-large-numbers bound") {
    const MatrixXd P = testsup::matrix25();
    const VectorXd u = VectorXd::Zero(4);
    const MatrixEnsemble ens = MatrixEnsemble::iid(P, u, 0.1, 0.0, 99);

    const long N = 100000;
    MatrixXd acc = MatrixXd::Zero(4, 4);
    MatrixXd Ps(4, 4);
    VectorXd us(4);
    for (long t = 0; t < N; ++t) {
        draw_into(ens, 0, u, t, Ps, us);
        acc += Ps;
    }
    acc /= static_cast<double>(N);
    const double bound = 3.0 * 0.1 / std::sqrt(static_cast<double>(N));
    CHECK((acc - P).cwiseAbs().maxCoeff() <= bound);
}

TEST_CASE("empirical moments respect the CLT tolerance") {
    VectorXd u(3);
    u << -1, 0, 2;
    const MatrixEnsemble ens =
        MatrixEnsemble::iid(MatrixXd::Identity(3, 3), u, 0.2, 0.3, 7);
    const EnsembleMoments m = empirical_moments(ens, VectorXd::Zero(3), 100000);
    for (int i = 0; i < 3; ++i) {
        CHECK(std::abs(m.mean_u_hat[i] - u[i]) <= 4.0 * 0.3 / std::sqrt(1e5));
    }
    // the Var floor needed for arbitrary-gain non-convergence results
    CHECK(m.min_u_variance > 0.5 * 0.3 * 0.3);
    CHECK(m.min_u_variance < 2.0 * 0.3 * 0.3);
}

TEST_CASE("state-dependent noise vanishes at the origin and is zero-mean") {
    const MatrixXd P = testsup::matrix24();
    const MatrixEnsemble ens = MatrixEnsemble::state_dependent(P, 1.0, 1.0, 11);

    const auto [Ps, us] = draw(ens, 0, VectorXd::Zero(5), 0);
    CHECK(Ps == P);
    CHECK(us.cwiseAbs().maxCoeff() == 0.0); // f_ji(0) = 0

    // at x = e1 the noise is active but conditionally zero-mean
    const EnsembleMoments m = empirical_moments(ens, VectorXd::Unit(5, 0), 100000);
    const double se = m.stderr_u.maxCoeff();
    CHECK(m.mean_u_hat.cwiseAbs().maxCoeff() <= 4.0 * se);
    CHECK(m.second_moment_u > 0.0);
}

TEST_CASE("state-dependent ensembles require zero mean input") {
    MatrixEnsemble ens;
    ens.mean_P = MatrixXd::Identity(2, 2);
    ens.mean_u = VectorXd::Ones(2);
    ens.kind = NoiseKind::StateDependent;
    ens.w_variance = 1.0;
    CHECK_THROWS_AS(ens.validate(), InvalidInput);
}

TEST_CASE("draws are reproducible and substreams are distinct") {
    const MatrixEnsemble ens =
        MatrixEnsemble::iid(testsup::matrix25(), VectorXd::Zero(4), 0.5, 0.5, 1234);
    const VectorXd x = VectorXd::Ones(4);

    const auto [P1, u1] = draw(ens, 10, x, 2);
    const auto [P2, u2] = draw(ens, 10, x, 2);
    CHECK(P1 == P2); // bit-identical
    CHECK(u1 == u2);

    const auto [P3, u3] = draw(ens, 11, x, 2);
    const auto [P4, u4] = draw(ens, 10, x, 3);
    CHECK(P1 != P3); // distinct step
    CHECK(P1 != P4); // distinct trial
}

TEST_CASE("substream outputs differ across stream tags") {
    Substream a(42, 0, 0, 0), b(42, 1, 0, 0);
    bool all_equal = true;
    for (int i = 0; i < 8; ++i) {
        if (a.next_u64() != b.next_u64()) all_equal = false;
    }
    CHECK_FALSE(all_equal);
}

TEST_CASE("normal generator moments are sane") {
    Substream s(7, 0, 0, 0);
    const long N = 200000;
    double sum = 0.0, sumsq = 0.0;
    for (long i = 0; i < N; ++i) {
        const double z = s.next_normal();
        sum += z;
        sumsq += z * z;
    }
    const double mean = sum / N;
    const double var = sumsq / N - mean * mean;
    CHECK(std::abs(mean) <= 4.0 / std::sqrt(static_cast<double>(N)));
    CHECK(var == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("matrix sequence draws have the configured mean") {
    MatrixSequence seq{testsup::matrix25(), 0.3};
    MatrixXd acc = MatrixXd::Zero(4, 4);
    MatrixXd M(4, 4);
    const long N = 20000;
    for (long t = 0; t < N; ++t) {
        draw_matrix_into(seq, 5, stream_tag::coupling_noise, 0, t, M);
        acc += M;
    }
    acc /= static_cast<double>(N);
    CHECK((acc - seq.mean).cwiseAbs().maxCoeff() <= 4.0 * 0.3 / std::sqrt(20000.0));
}
