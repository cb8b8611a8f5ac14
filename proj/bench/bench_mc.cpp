// Benchmark: OpenMP-parallel Monte Carlo harness vs the serial reference.
// Also verifies the two produce identical statistics (fixed-order reduction).

#include "linsa/mc_harness.hpp"

#include <chrono>
#include <cstdio>

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace linsa;

namespace {

SimScenario consensus_scenario() {
    Eigen::MatrixXd P(5, 5);
    P << 0.5, 0.3, 0.0, 0.3, -0.1,
        -0.1, 0.3, 0.3, 0.0, 0.5,
         0.0, 0.2, 0.4, 0.5, -0.1,
         0.1, 0.0, 0.6, 0.4, -0.1,
         0.1, -0.1, 0.1, 0.3, 0.6;
    SimScenario sc;
    sc.ensemble = MatrixEnsemble::iid(P, Eigen::VectorXd::Zero(5), 0.1, 0.1, 2024);
    sc.gain = GainSchedule::harmonic();
    sc.x0 = Eigen::VectorXd::LinSpaced(5, 1.0, 5.0);
    sc.steps = 20000;
    return sc;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

} // namespace

int main() {
    const SimScenario sc = consensus_scenario();
    const std::vector<long> cks = geometric_checkpoints(sc.steps);
    const long trials = 64;

#ifdef _OPENMP
    const int threads = omp_get_max_threads();
#else
    const int threads = 1;
#endif
    std::printf("scenario: n=5 consensus, S=%ld, trials=%ld, threads=%d\n", sc.steps,
                trials, threads);

    auto t0 = std::chrono::steady_clock::now();
    const TrajectoryStats serial = estimate_serial(sc, cks, trials);
    const double t_serial = seconds_since(t0);

    t0 = std::chrono::steady_clock::now();
    const TrajectoryStats parallel = estimate(sc, cks, trials);
    const double t_parallel = seconds_since(t0);

    bool identical = serial.mse.size() == parallel.mse.size();
    for (size_t k = 0; identical && k < serial.mse.size(); ++k) {
        identical = serial.mse[k] == parallel.mse[k] &&
                    serial.mse_stderr[k] == parallel.mse_stderr[k] &&
                    serial.gap[k] == parallel.gap[k];
    }

    std::printf("serial reference: %8.3f s\n", t_serial);
    std::printf("openmp parallel:  %8.3f s  (speedup %.2fx)\n", t_parallel,
                t_serial / t_parallel);
    std::printf("results bit-identical: %s\n", identical ? "yes" : "NO");
    return identical ? 0 : 1;
}
