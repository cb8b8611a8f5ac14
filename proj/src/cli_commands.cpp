#include "linsa/cli_commands.hpp"

#include "linsa/analysis.hpp"
#include "linsa/errors.hpp"

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace linsa {

using nlohmann::json;

namespace {

// %.17g round-trips doubles exactly: reruns with the same seed produce
// byte-identical files.
std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

json vec_json(const Eigen::VectorXd& v) {
    json arr = json::array();
    for (int i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
}

json verdict_json(const ConvergenceVerdict& v) {
    json j;
    j["regime"] = to_string(v.regime);
    j["gain_sign"] = to_string(v.gain_sign);
    j["applicable_result"] = v.applicable_result;
    j["limit_is_random"] = v.limit_is_random;
    j["borderline"] = v.borderline;
    j["rho_max_re"] = v.rho_max_re;
    j["rho_min_re"] = v.rho_min_re;
    if (v.expected_limit) j["expected_limit"] = vec_json(*v.expected_limit);
    if (v.rate_exponent) j["rate_exponent"] = *v.rate_exponent;
    if (!v.witness.empty()) j["witness"] = v.witness;
    return j;
}

int exit_code_for(const ConvergenceVerdict& v) {
    if (v.borderline) return kExitBorderline;
    return v.regime == Regime::DivergesOrOscillates ? kExitDivergent : kExitConvergent;
}

NoiseProfile profile_for(const ScenarioConfig& cfg) {
    const bool nondegenerate =
        cfg.noise_kind == NoiseKind::IidEntrywise && cfg.sigma_u > 0.0;
    return nondegenerate ? NoiseProfile::NonDegenerateInput : NoiseProfile::DegenerateInput;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open output file: " + path);
    out << content;
    if (!out) throw IoError("write failed: " + path);
}

} // namespace

ClassifyReport run_classify(const ScenarioConfig& cfg) {
    ClassifyReport rep;
    std::ostringstream text;
    json summary;
    summary["schema"] = "linsa-classify/1";
    summary["name"] = cfg.name;

    if (cfg.is_fj()) {
        const FjScenario sc = cfg.make_fj_scenario_config();
        const double residual =
            (sc.fixed_point - sc.lambda.asDiagonal() * sc.P * sc.fixed_point *
                                  sc.C.transpose() -
             (Eigen::VectorXd::Ones(sc.n()) - sc.lambda).asDiagonal() * sc.X0)
                .norm();
        text << "FJ scenario '" << cfg.name << "'\n";
        text << "  lifted rho_max = " << fmt(sc.lifted_rho_max) << " (< 1: contraction)\n";
        text << "  fixed point residual = " << fmt(residual) << "\n";
        text << "  verdict: converges in mean square to the unique fixed point\n";
        summary["kind"] = "fj";
        summary["lifted_rho_max"] = sc.lifted_rho_max;
        summary["fixed_point_residual"] = residual;
        summary["fixed_point"] = vec_json(vec_rowmajor(sc.fixed_point));
        rep.exit_code = kExitConvergent;
        rep.text = text.str();
        rep.summary_json = summary.dump(2);
        return rep;
    }

    const double tol = cfg.tol > 0.0 ? cfg.tol : default_tol(*cfg.P);
    const GainSign sign =
        cfg.gain.non_negative() ? GainSign::NonNegative : GainSign::NonPositive;
    ConvergenceVerdict v = classify(*cfg.P, *cfg.u, sign, tol, cfg.x0);
    if (cfg.gain.kind == GainSchedule::Kind::PowerLaw &&
        v.regime != Regime::DivergesOrOscillates) {
        v.rate_exponent = predicted_rate(*cfg.P, cfg.gain, tol);
    }

    text << "scenario '" << cfg.name << "' (" << to_string(sign) << " gains)\n";
    text << "  rho_max = " << fmt(v.rho_max_re) << ", rho_min = " << fmt(v.rho_min_re)
         << "\n";
    text << "  regime: " << to_string(v.regime) << " [" << v.applicable_result << "]";
    if (v.borderline) text << " (borderline)";
    text << "\n";
    if (v.expected_limit) {
        text << "  expected limit:";
        for (int i = 0; i < v.expected_limit->size(); ++i) {
            text << " " << fmt((*v.expected_limit)[i]);
        }
        text << (v.limit_is_random ? "  (mean of a random limit)\n" : "\n");
    }
    if (v.rate_exponent) {
        text << "  predicted rate exponent: " << fmt(*v.rate_exponent) << "\n";
    }
    if (!v.witness.empty()) text << "  witness: " << v.witness << "\n";
    summary["verdict"] = verdict_json(v);

    // Group consensus requires u = 0; report it when a partition is declared.
    if (cfg.partition) {
        try {
            const GroupConsensusVerdict gv =
                group_consensus_verdict(*cfg.P, *cfg.u, *cfg.partition, sign, tol);
            text << "  group consensus: " << (gv.reaches ? "yes" : "no") << " ["
                 << gv.applicable_result << "]\n";
            summary["group_consensus"] = {{"reaches", gv.reaches},
                                          {"applicable_result", gv.applicable_result},
                                          {"witness", gv.witness}};
        } catch (const PreconditionViolated& e) {
            text << "  group consensus: not applicable (" << e.what() << ")\n";
            summary["group_consensus"] = {{"applicable", false}, {"reason", e.what()}};
        }
    }

    try {
        const SpanningTreeResult st = spanning_tree(*cfg.P, tol);
        text << "  spanning tree: " << (st.has_spanning_tree ? "yes" : "no");
        if (st.root) text << " (root agent " << (*st.root + 1) << ")";
        text << "\n";
        summary["spanning_tree"] = {{"present", st.has_spanning_tree}};
        if (st.root) summary["spanning_tree"]["root"] = *st.root + 1;
    } catch (const PreconditionViolated&) {
        // P is not row-stochastic; the topology test does not apply.
    }

    const ArbitraryGainVerdict av = arbitrary_gain_verdict(*cfg.P, *cfg.u, profile_for(cfg), tol);
    text << "  arbitrary-gain convergence to a deterministic vector: "
         << (av.convergible ? "yes" : "no") << " [" << av.applicable_result << "]\n";
    summary["arbitrary_gain"] = {{"convergible", av.convergible},
                                 {"applicable_result", av.applicable_result}};

    rep.exit_code = exit_code_for(v);
    rep.text = text.str();
    rep.summary_json = summary.dump(2);
    return rep;
}

SimulateResult run_simulate(const ScenarioConfig& cfg_in, const SimulateOverrides& overrides) {
    ScenarioConfig cfg = cfg_in;
    if (overrides.trials) cfg.trials = *overrides.trials;
    if (overrides.seed) cfg.seed = *overrides.seed;
    if (overrides.out_dir) cfg.output_dir = *overrides.out_dir;
    cfg.validate();

    std::filesystem::create_directories(cfg.output_dir);
    SimulateResult res;
    res.trajectory_path = cfg.output_dir + "/" + cfg.name + "_trajectory.csv";
    res.stats_path = cfg.output_dir + "/" + cfg.name + "_stats.csv";
    res.summary_path = cfg.output_dir + "/" + cfg.name + "_summary.json";

    json summary;
    summary["schema"] = "linsa-summary/1";
    summary["name"] = cfg.name;
    summary["seed"] = cfg.seed;
    summary["trials"] = cfg.trials;
    summary["steps"] = cfg.steps;

    const long record_every =
        cfg.record_every > 0 ? cfg.record_every : std::max<long>(1, cfg.steps / 1000);
    const std::vector<long> checkpoints =
        cfg.checkpoints.empty() ? geometric_checkpoints(cfg.steps) : cfg.checkpoints;

    if (cfg.is_fj()) {
        const FjScenario sc = cfg.make_fj_scenario_config();
        const TrajectoryStats stats = estimate_fj(sc, checkpoints, cfg.trials);

        // trajectory of trial 0 (vectorized row-major state)
        std::ostringstream traj;
        traj << "# linsa fj trajectory v1 (row-major vec of X)\n";
        traj << "step";
        for (int i = 0; i < sc.n(); ++i) {
            for (int k = 0; k < sc.m(); ++k) traj << ",x" << (i + 1) << "_" << (k + 1);
        }
        traj << "\n";
        const MatrixTrajectory mt = run_fj(sc, record_every, 0);
        for (size_t t = 0; t < mt.steps.size(); ++t) {
            traj << mt.steps[t];
            const Eigen::VectorXd y = vec_rowmajor(mt.states[t]);
            for (int i = 0; i < y.size(); ++i) traj << "," << fmt(y[i]);
            traj << "\n";
        }
        write_file(res.trajectory_path, traj.str());

        std::ostringstream sv;
        sv << "# linsa stats v1\nstep,mse,mse_stderr,gap\n";
        for (size_t k = 0; k < stats.checkpoints.size(); ++k) {
            sv << stats.checkpoints[k] << "," << fmt(stats.mse[k]) << ","
               << fmt(stats.mse_stderr[k]) << "," << fmt(stats.gap[k]) << "\n";
        }
        write_file(res.stats_path, sv.str());

        const double residual =
            (sc.fixed_point - sc.lambda.asDiagonal() * sc.P * sc.fixed_point *
                                  sc.C.transpose() -
             (Eigen::VectorXd::Ones(sc.n()) - sc.lambda).asDiagonal() * sc.X0)
                .norm();
        summary["kind"] = "fj";
        summary["lifted_rho_max"] = sc.lifted_rho_max;
        summary["fixed_point_residual"] = residual;
        summary["final_mse"] = stats.mse.back();
        summary["diverged_trials"] = stats.diverged_trials;
        res.verdict_simulation_agree = !stats.all_diverged;
        summary["agreement"] = {{"no_all_diverged", !stats.all_diverged}};
        res.exit_code = kExitConvergent;
        res.summary_json = summary.dump(2);
        write_file(res.summary_path, res.summary_json);
        return res;
    }

    const double tol = cfg.tol > 0.0 ? cfg.tol : default_tol(*cfg.P);
    const GainSign sign =
        cfg.gain.non_negative() ? GainSign::NonNegative : GainSign::NonPositive;
    ConvergenceVerdict v = classify(*cfg.P, *cfg.u, sign, tol, cfg.x0);
    if (cfg.gain.kind == GainSchedule::Kind::PowerLaw &&
        v.regime != Regime::DivergesOrOscillates) {
        v.rate_exponent = predicted_rate(*cfg.P, cfg.gain, tol);
    }
    summary["verdict"] = verdict_json(v);

    const SimScenario scenario = cfg.make_scenario();
    const TrajectoryStats stats = estimate(scenario, checkpoints, cfg.trials);

    std::ostringstream traj;
    traj << "# linsa trajectory v1\n";
    traj << "step";
    for (int i = 0; i < cfg.x0->size(); ++i) traj << ",x" << (i + 1);
    traj << "\n";
    const Trajectory t0 = run(*cfg.x0, cfg.gain, scenario.ensemble, cfg.steps, record_every, 0);
    for (size_t t = 0; t < t0.steps.size(); ++t) {
        traj << t0.steps[t];
        for (int i = 0; i < t0.states[t].size(); ++i) traj << "," << fmt(t0.states[t][i]);
        traj << "\n";
    }
    write_file(res.trajectory_path, traj.str());

    std::ostringstream sv;
    sv << "# linsa stats v1\nstep,mse,mse_stderr,gap\n";
    for (size_t k = 0; k < stats.checkpoints.size(); ++k) {
        sv << stats.checkpoints[k] << "," << fmt(stats.mse[k]) << ","
           << fmt(stats.mse_stderr[k]) << "," << fmt(stats.gap[k]) << "\n";
    }
    write_file(res.stats_path, sv.str());

    summary["reference_mode"] = to_string(stats.ref_mode_used);
    summary["n_trials"] = stats.n_trials;
    summary["diverged_trials"] = stats.diverged_trials;
    summary["all_diverged"] = stats.all_diverged;
    if (!stats.all_diverged) {
        summary["final_mse"] = stats.mse.back();
        summary["final_gap"] = stats.gap.back();
    }
    if (stats.tail_mean) summary["tail_mean"] = vec_json(*stats.tail_mean);
    if (stats.tail_variance) summary["tail_variance"] = vec_json(*stats.tail_variance);
    if (stats.ref_mode_used == ReferenceMode::TailProxy) {
        summary["reference_note"] =
            "tail-proxy reference: mse is biased by E||x(S)-x(inf)||^2";
    }

    // Rate cross-check: fitted exponent vs the predicted one.
    if (v.rate_exponent && !stats.all_diverged) {
        const double lo = cfg.fit_window ? cfg.fit_window->first
                                         : static_cast<double>(cfg.steps) / 100.0;
        const double hi =
            cfg.fit_window ? cfg.fit_window->second : static_cast<double>(cfg.steps);
        try {
            const RateFit fit = fit_rate(stats, lo, hi);
            summary["fit"] = {{"exponent", fit.exponent},
                              {"stderr", fit.stderr},
                              {"r_squared", fit.r_squared},
                              {"points", fit.points},
                              {"window", {lo, hi}},
                              {"predicted_exponent", *v.rate_exponent}};
        } catch (const InsufficientData& e) {
            summary["fit"] = {{"error", e.what()}};
        }
    }

    // Verdict/simulation agreement: convergent => not all trials diverged;
    // divergent => divergence observed or the mse tail does not decrease.
    bool agree = true;
    if (v.regime != Regime::DivergesOrOscillates) {
        agree = !stats.all_diverged;
    } else {
        bool tail_nondecreasing = false;
        if (!stats.all_diverged && stats.mse.size() >= 2) {
            const size_t mid = stats.mse.size() / 2;
            tail_nondecreasing = stats.mse.back() >= stats.mse[mid];
        }
        agree = stats.diverged_trials > 0 || stats.all_diverged || tail_nondecreasing;
    }
    res.verdict_simulation_agree = agree;
    summary["agreement"] = {{"verdict_vs_simulation", agree}};

    if (cfg.partition) {
        try {
            const GroupConsensusVerdict gv =
                group_consensus_verdict(*cfg.P, *cfg.u, *cfg.partition, sign, tol);
            summary["group_consensus"] = {{"reaches", gv.reaches},
                                          {"applicable_result", gv.applicable_result},
                                          {"final_within_group_gap", stats.gap.back()}};
        } catch (const PreconditionViolated& e) {
            summary["group_consensus"] = {{"applicable", false}, {"reason", e.what()}};
        }
    }

    res.exit_code = exit_code_for(v);
    res.summary_json = summary.dump(2);
    write_file(res.summary_path, res.summary_json);
    return res;
}

} // namespace linsa
