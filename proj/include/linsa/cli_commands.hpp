#pragma once

#include "linsa/config.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace linsa {

// CLI exit codes.
inline constexpr int kExitConvergent = 0;
inline constexpr int kExitConfigError = 1;
inline constexpr int kExitBorderline = 2;
inline constexpr int kExitDivergent = 10;

struct ClassifyReport {
    int exit_code = kExitConvergent;
    std::string text;        // human-readable report
    std::string summary_json; // machine-readable verdict record
};

/// Spectral classification of the configured scenario: convergence verdict,
/// group-consensus verdict and spanning-tree check when applicable, or the FJ
/// fixed point with its residual.
ClassifyReport run_classify(const ScenarioConfig& cfg);

struct SimulateResult {
    int exit_code = kExitConvergent;
    std::string trajectory_path;
    std::string stats_path;
    std::string summary_path;
    bool verdict_simulation_agree = true;
    std::string summary_json;
};

struct SimulateOverrides {
    std::optional<long> trials;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
};

/// Runs the Monte Carlo experiment and writes trajectory CSV, stats CSV and
/// a summary JSON (verdict cross-checks included). Output is byte-identical
/// for identical (config, seed).
SimulateResult run_simulate(const ScenarioConfig& cfg, const SimulateOverrides& overrides = {});

} // namespace linsa
