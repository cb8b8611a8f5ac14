#pragma once

#include "linsa/errors.hpp"
#include "linsa/mc_harness.hpp"
#include "linsa/multidim.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace linsa {

struct ConfigError : Error {
    using Error::Error;
};

/// One scenario file = one experiment: system + ensemble + gain + run block.
/// Either the vector system (P, u, x0) or the FJ block is present.
struct ScenarioConfig {
    std::string name = "scenario";

    // vector system
    std::optional<Eigen::MatrixXd> P;
    std::optional<Eigen::VectorXd> u;
    std::optional<Eigen::VectorXd> x0;

    // FJ system
    struct FjBlock {
        Eigen::VectorXd lambda;
        Eigen::MatrixXd P;
        Eigen::MatrixXd C;
        Eigen::MatrixXd X0;
        double sigma_lambda = 0.0;
        double sigma_P = 0.0;
        double sigma_C = 0.0;
    };
    std::optional<FjBlock> fj;

    NoiseKind noise_kind = NoiseKind::None;
    double sigma_P = 0.0;
    double sigma_u = 0.0;
    double noise_scale = 0.0;
    double w_variance = 0.0;

    GainSchedule gain;
    std::optional<Partition> partition;

    long steps = 1000;
    long trials = 100;
    std::uint64_t seed = 0;
    long record_every = 0; // 0 -> steps/1000 (at least 1)
    std::vector<long> checkpoints; // empty -> geometric
    ReferenceMode ref_mode = ReferenceMode::Auto;
    double tol = 0.0; // 0 -> default_tol

    std::optional<std::pair<double, double>> fit_window;
    std::string output_dir = "out";

    bool is_fj() const { return fj.has_value(); }
    void validate() const; // throws ConfigError with field diagnostics

    MatrixEnsemble make_ensemble() const;
    SimScenario make_scenario() const;
    FjScenario make_fj_scenario_config() const;
};

ScenarioConfig parse_config(const nlohmann::json& j);
ScenarioConfig load_config(const std::string& path);
nlohmann::json to_json(const ScenarioConfig& cfg); // parse/validate round-trip

} // namespace linsa
