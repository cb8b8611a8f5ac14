#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "linsa/errors.hpp"
#include "linsa/mc_harness.hpp"
#include "test_support.hpp"

#include <cmath>

using namespace linsa;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

SimScenario critical_consensus(double sigma, std::uint64_t seed, long steps) {
    SimScenario sc;
    sc.ensemble = MatrixEnsemble::iid(testsup::matrix24(), VectorXd::Zero(5), sigma, sigma,
                                      seed);
    sc.gain = GainSchedule::harmonic();
    sc.x0 = VectorXd::LinSpaced(5, 1.0, 5.0);
    sc.steps = steps;
    return sc;
}

} // namespace

TEST_CASE("deterministic scenario has exact errors and zero standard error") {
    MatrixXd P = MatrixXd::Zero(2, 2);
    P(0, 0) = 0.5;
    P(1, 1) = 0.25;
    VectorXd u(2);
    u << 1.0, 1.5;
    SimScenario sc;
    sc.ensemble = MatrixEnsemble::deterministic(P, u);
    sc.gain = GainSchedule::harmonic();
    sc.x0 = VectorXd::Zero(2);
    sc.steps = 4096;

    const TrajectoryStats st = estimate(sc, geometric_checkpoints(sc.steps), 8);
    CHECK(st.ref_mode_used == ReferenceMode::FixedLimit);
    REQUIRE(st.fixed_reference.has_value());
    CHECK((*st.fixed_reference)[0] == doctest::Approx(2.0));
    for (double se : st.mse_stderr) CHECK(se == 0.0);
    // mse decreases monotonically to ~0 for the averaged map
    CHECK(st.mse.back() < st.mse[2]);
    CHECK(st.diverged_trials == 0);
}

TEST_CASE("parallel estimate is bit-identical to the serial reference") {
    const SimScenario sc = critical_consensus(0.1, 99, 2000);
    const std::vector<long> cks = geometric_checkpoints(sc.steps);
    const TrajectoryStats a = estimate(sc, cks, 24);
    const TrajectoryStats b = estimate_serial(sc, cks, 24);
    REQUIRE(a.checkpoints == b.checkpoints);
    for (size_t k = 0; k < a.mse.size(); ++k) {
        CHECK(a.mse[k] == b.mse[k]);
        CHECK(a.mse_stderr[k] == b.mse_stderr[k]);
        CHECK(a.gap[k] == b.gap[k]);
    }
    // and a repeated run with the same seed reproduces exactly
    const TrajectoryStats c = estimate(sc, cks, 24);
    for (size_t k = 0; k < a.mse.size(); ++k) CHECK(a.mse[k] == c.mse[k]);
}

TEST_CASE("standard errors shrink like 1/sqrt(trials)") {
    // compare a mid-trajectory checkpoint; the final one is the tail reference
    const SimScenario sc = critical_consensus(0.2, 7, 1000);
    const std::vector<long> cks = {250};
    const TrajectoryStats small = estimate(sc, cks, 64);
    SimScenario sc4 = sc;
    sc4.ensemble.seed = 1007; // refreshed seeds for the bigger batch
    const TrajectoryStats big = estimate(sc4, cks, 256);
    const double ratio = small.mse_stderr.front() / big.mse_stderr.front();
    CHECK(ratio > 2.0 * 0.7); // within +-30% of the 1/sqrt(n) factor 2
    CHECK(ratio < 2.0 * 1.3);
}

TEST_CASE("diverging scenario: all trials trip the guard") {
    MatrixXd P = MatrixXd::Zero(2, 2);
    P(0, 0) = 2.0;
    P(1, 1) = 0.5;
    SimScenario sc;
    sc.ensemble = MatrixEnsemble::iid(P, VectorXd::Zero(2), 0.0, 0.1, 5);
    sc.gain = GainSchedule::power_law(1, 3.0, 1.0, 0.51);
    sc.x0 = VectorXd::Ones(2);
    sc.steps = 30000;
    sc.ref_mode = ReferenceMode::TailProxy;

    const TrajectoryStats st = estimate(sc, geometric_checkpoints(sc.steps), 16);
    CHECK(st.diverged_trials == 16);
    CHECK(st.all_diverged);
    CHECK(std::isnan(st.mse.back()));
}

TEST_CASE("rate fit recovers an exact power law") {
    TrajectoryStats st;
    for (long s = 16; s <= 1 << 18; s *= 2) {
        st.checkpoints.push_back(s);
        st.mse.push_back(7.0 / static_cast<double>(s));
        st.mse_stderr.push_back(0.0);
        st.gap.push_back(0.0);
    }
    const RateFit fit = fit_rate(st, 16.0, static_cast<double>(1 << 18));
    CHECK(fit.exponent == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(fit.r_squared == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(fit.stderr <= 1e-12);
}

TEST_CASE("rate fit refuses degenerate windows") {
    TrajectoryStats st;
    st.checkpoints = {10, 20, 40};
    st.mse = {1.0, 0.5, 0.25};
    st.mse_stderr = {0, 0, 0};
    st.gap = {0, 0, 0};
    CHECK_THROWS_AS(fit_rate(st, 10.0, 40.0), InsufficientData);
    CHECK_THROWS_AS(fit_rate(st, 1000.0, 2000.0), InsufficientData);
}

TEST_CASE("within-group gap contracts in the critical consensus scenario") {
    const SimScenario sc = critical_consensus(0.1, 12, 20000);
    const TrajectoryStats st = estimate(sc, geometric_checkpoints(sc.steps), 32);
    const double initial_spread = 4.0; // x0 = (1..5)
    CHECK(st.gap.back() < 0.10 * initial_spread);
    CHECK(st.gap.back() < st.gap[3]);
}

TEST_CASE("cauchy gaps vanish for convergent scenarios") {
    SimScenario sc;
    sc.ensemble = MatrixEnsemble::iid(0.5 * testsup::matrix24(), VectorXd::Zero(5), 0.05,
                                      0.05, 3);
    sc.gain = GainSchedule::power_law(1, 2.0, 1.0, 1.0);
    sc.x0 = VectorXd::LinSpaced(5, 1.0, 5.0);
    sc.steps = 32768;

    const std::vector<long> s1 = {512, 2048};
    const std::vector<long> s2 = {8192, 32768};
    const MatrixXd gaps = cauchy_gap(sc, s1, s2, 48);
    // later pairs have smaller gaps, and the late-late gap is near zero
    CHECK(gaps(1, 1) < gaps(0, 0));
    CHECK(gaps(1, 1) < 1e-2);
}

TEST_CASE("cauchy gap is exactly zero at coincident steps") {
    const SimScenario sc = critical_consensus(0.1, 21, 1000);
    const std::vector<long> s = {500};
    const MatrixXd gaps = cauchy_gap(sc, s, s, 8);
    CHECK(gaps(0, 0) == 0.0);
}

TEST_CASE("oscillatory regime keeps the gap bounded away from zero") {
    MatrixXd R(2, 2);
    R << 1.0, 0.5, -0.5, 1.0; // eigenvalues 1 +- 0.5i
    SimScenario sc;
    sc.ensemble = MatrixEnsemble::iid(R, VectorXd::Zero(2), 0.05, 0.05, 17);
    sc.gain = GainSchedule::power_law(1, 1.0, 1.0, 0.75);
    VectorXd x0(2);
    x0 << 1.0, 0.5;
    sc.x0 = x0;
    sc.steps = 20000;

    const std::vector<long> s1 = {2500, 5000};
    const std::vector<long> s2 = {10000, 20000};
    const MatrixXd gaps = cauchy_gap(sc, s1, s2, 48);
    CHECK(gaps.minCoeff() > 0.05); // pilot value ~0.4; threshold leaves margin
}

TEST_CASE("tail statistics are recorded in the tail-proxy mode") {
    const SimScenario sc = critical_consensus(0.05, 33, 2000);
    const TrajectoryStats st = estimate(sc, {1000, 2000}, 16);
    CHECK(st.ref_mode_used == ReferenceMode::TailProxy);
    REQUIRE(st.tail_mean.has_value());
    REQUIRE(st.tail_variance.has_value());
    // consensus tail: all components near a common random value
    const VectorXd m = *st.tail_mean;
    CHECK((m.maxCoeff() - m.minCoeff()) < 0.5);
}

TEST_CASE("estimate validates its inputs") {
    const SimScenario sc = critical_consensus(0.1, 1, 100);
    CHECK_THROWS_AS(estimate(sc, {50}, 1), InvalidInput);
    CHECK_THROWS_AS(estimate(sc, {1000}, 8), InvalidInput); // checkpoint beyond S
}
