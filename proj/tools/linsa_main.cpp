#include "linsa/cli_commands.hpp"
#include "linsa/errors.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"linsa: linear stochastic-approximation simulator and classifier"};
    app.require_subcommand(1);

    std::string classify_config;
    CLI::App* classify =
        app.add_subcommand("classify", "classify a scenario's convergence behavior");
    classify->add_option("config", classify_config, "scenario config (JSON)")
        ->required()
        ->check(CLI::ExistingFile);

    std::string sim_config;
    long trials = -1;
    std::int64_t seed = -1;
    std::string out_dir;
    CLI::App* simulate =
        app.add_subcommand("simulate", "run the Monte Carlo experiment, write CSV/JSON");
    simulate->add_option("config", sim_config, "scenario config (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    simulate->add_option("--trials", trials, "override run.trials");
    simulate->add_option("--seed", seed, "override run.seed");
    simulate->add_option("--out", out_dir, "override output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (classify->parsed()) {
            const linsa::ScenarioConfig cfg = linsa::load_config(classify_config);
            const linsa::ClassifyReport rep = linsa::run_classify(cfg);
            std::cout << rep.text;
            return rep.exit_code;
        }
        const linsa::ScenarioConfig cfg = linsa::load_config(sim_config);
        linsa::SimulateOverrides overrides;
        if (trials >= 0) overrides.trials = trials;
        if (seed >= 0) overrides.seed = static_cast<std::uint64_t>(seed);
        if (!out_dir.empty()) overrides.out_dir = out_dir;
        const linsa::SimulateResult res = linsa::run_simulate(cfg, overrides);
        std::cout << "wrote " << res.trajectory_path << "\n";
        std::cout << "wrote " << res.stats_path << "\n";
        std::cout << "wrote " << res.summary_path << "\n";
        std::cout << "verdict/simulation agreement: "
                  << (res.verdict_simulation_agree ? "yes" : "NO") << "\n";
        return res.exit_code;
    } catch (const linsa::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return linsa::kExitConfigError;
    } catch (const linsa::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return linsa::kExitConfigError;
    }
}
