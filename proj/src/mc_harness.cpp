#include "linsa/mc_harness.hpp"

#include "linsa/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace linsa {

const char* to_string(ReferenceMode mode) {
    switch (mode) {
    case ReferenceMode::Auto: return "auto";
    case ReferenceMode::FixedLimit: return "fixed-limit";
    case ReferenceMode::TailProxy: return "tail-proxy";
    }
    return "?";
}

std::vector<long> geometric_checkpoints(long S) {
    std::vector<long> cks;
    for (long c = 1; c < S; c *= 2) cks.push_back(c);
    cks.push_back(S);
    return cks;
}

namespace {

struct TrialRecord {
    std::vector<Eigen::VectorXd> at_checkpoint;
    bool diverged = false;
};

std::vector<long> normalized_checkpoints(const std::vector<long>& checkpoints, long S) {
    std::vector<long> cks = checkpoints;
    cks.push_back(S);
    std::sort(cks.begin(), cks.end());
    cks.erase(std::unique(cks.begin(), cks.end()), cks.end());
    if (cks.front() < 0 || cks.back() > S) {
        throw InvalidInput("checkpoints must lie in [0, S]");
    }
    return cks;
}

// One trajectory, recording states at the requested checkpoints only.
TrialRecord run_trial(const SimScenario& scenario, const std::vector<long>& cks,
                      long trial) {
    const int n = scenario.ensemble.dim();
    TrialRecord rec;
    rec.at_checkpoint.resize(cks.size());

    Eigen::VectorXd x = scenario.x0;
    Eigen::MatrixXd P_s(n, n);
    Eigen::VectorXd u_s(n), mapped(n);

    size_t next = 0;
    if (next < cks.size() && cks[next] == 0) rec.at_checkpoint[next++] = x;

    for (long s = 0; s < scenario.steps && next < cks.size(); ++s) {
        const double a = scenario.gain.at(s);
        draw_into(scenario.ensemble, s, x, trial, P_s, u_s);
        mapped.noalias() = P_s * x;
        mapped += u_s;
        x = (1.0 - a) * x + a * mapped;
        if (!x.allFinite() || x.cwiseAbs().maxCoeff() > kDivergenceGuard) {
            rec.diverged = true;
            return rec;
        }
        if (cks[next] == s + 1) rec.at_checkpoint[next++] = x;
    }
    return rec;
}

TrajectoryStats aggregate(const SimScenario& scenario, const std::vector<long>& cks,
                          const std::vector<TrialRecord>& trials,
                          ReferenceMode mode_used,
                          const std::optional<Eigen::VectorXd>& fixed_ref) {
    const int n = scenario.ensemble.dim();
    const size_t K = cks.size();
    TrajectoryStats stats;
    stats.checkpoints = cks;
    stats.n_trials = static_cast<long>(trials.size());
    stats.ref_mode_used = mode_used;
    stats.fixed_reference = fixed_ref;
    stats.mse.assign(K, 0.0);
    stats.mse_stderr.assign(K, 0.0);
    stats.gap.assign(K, 0.0);

    long live = 0;
    for (const auto& t : trials) {
        if (t.diverged) ++stats.diverged_trials;
        else ++live;
    }
    if (live == 0) {
        stats.all_diverged = true;
        stats.mse.assign(K, std::numeric_limits<double>::quiet_NaN());
        stats.mse_stderr.assign(K, std::numeric_limits<double>::quiet_NaN());
        stats.gap.assign(K, std::numeric_limits<double>::quiet_NaN());
        return stats;
    }

    const Partition part = scenario.partition.value_or(Partition::trivial(n));
    part.validate(n);

    // Fixed-order reduction over trial index: deterministic at any thread count.
    // Two-pass variance so identical trials give exactly zero standard error.
    for (size_t k = 0; k < K; ++k) {
        const double N = static_cast<double>(live);
        if (scenario.ensemble.kind == NoiseKind::None) {
            // all trials are the same trajectory; the mean is that value exactly
            const auto& t0 = trials.front();
            const Eigen::VectorXd& ref = fixed_ref ? *fixed_ref : t0.at_checkpoint.back();
            stats.mse[k] = (t0.at_checkpoint[k] - ref).squaredNorm();
        } else {
            double sum = 0.0;
            for (const auto& t : trials) {
                if (t.diverged) continue;
                const Eigen::VectorXd& ref =
                    fixed_ref ? *fixed_ref : t.at_checkpoint.back();
                sum += (t.at_checkpoint[k] - ref).squaredNorm();
            }
            stats.mse[k] = sum / N;
        }
        // degenerate ensembles run identical trials: no sampling error at all
        if (live > 1 && scenario.ensemble.kind != NoiseKind::None) {
            double ss = 0.0;
            for (const auto& t : trials) {
                if (t.diverged) continue;
                const Eigen::VectorXd& ref =
                    fixed_ref ? *fixed_ref : t.at_checkpoint.back();
                const double d = (t.at_checkpoint[k] - ref).squaredNorm() - stats.mse[k];
                ss += d * d;
            }
            stats.mse_stderr[k] = std::sqrt(ss / (N - 1.0) / N);
        }

        double worst_gap = 0.0;
        for (const auto& group : part.groups) {
            for (size_t a = 0; a < group.size(); ++a) {
                for (size_t b = a + 1; b < group.size(); ++b) {
                    double acc = 0.0;
                    for (const auto& t : trials) {
                        if (t.diverged) continue;
                        acc += std::abs(t.at_checkpoint[k][group[a]] -
                                        t.at_checkpoint[k][group[b]]);
                    }
                    worst_gap = std::max(worst_gap, acc / N);
                }
            }
        }
        stats.gap[k] = worst_gap;
    }

    if (!fixed_ref) {
        Eigen::VectorXd mean = Eigen::VectorXd::Zero(n);
        Eigen::VectorXd m2 = Eigen::VectorXd::Zero(n);
        for (const auto& t : trials) {
            if (t.diverged) continue;
            mean += t.at_checkpoint.back();
            m2 += t.at_checkpoint.back().cwiseProduct(t.at_checkpoint.back());
        }
        const double N = static_cast<double>(live);
        mean /= N;
        stats.tail_mean = mean;
        if (live > 1) {
            stats.tail_variance =
                ((m2 - N * mean.cwiseProduct(mean)) / (N - 1.0)).cwiseMax(0.0).eval();
        }
    }
    return stats;
}

ReferenceMode resolve_mode(const SimScenario& scenario) {
    if (scenario.ref_mode != ReferenceMode::Auto) return scenario.ref_mode;
    const double tol =
        scenario.tol > 0.0 ? scenario.tol : default_tol(scenario.ensemble.mean_P);
    const GainSign sign =
        scenario.gain.non_negative() ? GainSign::NonNegative : GainSign::NonPositive;
    const ConvergenceVerdict v =
        classify(scenario.ensemble.mean_P, scenario.ensemble.mean_u, sign, tol);
    return v.regime == Regime::ConvergesDeterministic ? ReferenceMode::FixedLimit
                                                      : ReferenceMode::TailProxy;
}

std::optional<Eigen::VectorXd> resolve_fixed_ref(const SimScenario& scenario,
                                                 ReferenceMode mode) {
    if (mode != ReferenceMode::FixedLimit) return std::nullopt;
    const double tol =
        scenario.tol > 0.0 ? scenario.tol : default_tol(scenario.ensemble.mean_P);
    const GainSign sign =
        scenario.gain.non_negative() ? GainSign::NonNegative : GainSign::NonPositive;
    return expected_limit(scenario.ensemble.mean_P, scenario.ensemble.mean_u, scenario.x0,
                          sign, tol);
}

int configured_threads() {
#ifdef _OPENMP
    if (const char* env = std::getenv("LINSA_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    return omp_get_max_threads();
#else
    return 1;
#endif
}

TrajectoryStats estimate_impl(const SimScenario& scenario,
                              const std::vector<long>& checkpoints, long n_trials,
                              bool parallel) {
    if (n_trials < 2) throw InvalidInput("estimate: n_trials must be >= 2");
    if (scenario.steps < 1) throw InvalidInput("estimate: steps must be >= 1");
    scenario.ensemble.validate();
    if (scenario.x0.size() != scenario.ensemble.dim()) {
        throw InvalidInput("estimate: x0 dimension mismatch");
    }

    const std::vector<long> cks = normalized_checkpoints(checkpoints, scenario.steps);
    const ReferenceMode mode = resolve_mode(scenario);
    const std::optional<Eigen::VectorXd> fixed_ref = resolve_fixed_ref(scenario, mode);

    std::vector<TrialRecord> trials(static_cast<size_t>(n_trials));
    if (parallel) {
#ifdef _OPENMP
        const int threads = configured_threads();
#pragma omp parallel for schedule(dynamic) num_threads(threads)
        for (long t = 0; t < n_trials; ++t) {
            trials[static_cast<size_t>(t)] = run_trial(scenario, cks, t);
        }
#else
        for (long t = 0; t < n_trials; ++t) {
            trials[static_cast<size_t>(t)] = run_trial(scenario, cks, t);
        }
#endif
    } else {
        for (long t = 0; t < n_trials; ++t) {
            trials[static_cast<size_t>(t)] = run_trial(scenario, cks, t);
        }
    }
    return aggregate(scenario, cks, trials, mode, fixed_ref);
}

} // namespace

TrajectoryStats estimate(const SimScenario& scenario, const std::vector<long>& checkpoints,
                         long n_trials) {
    return estimate_impl(scenario, checkpoints, n_trials, /*parallel=*/true);
}

TrajectoryStats estimate_serial(const SimScenario& scenario,
                                const std::vector<long>& checkpoints, long n_trials) {
    return estimate_impl(scenario, checkpoints, n_trials, /*parallel=*/false);
}

RateFit fit_rate(const TrajectoryStats& stats, double window_lo, double window_hi) {
    std::vector<double> ls, lm;
    for (size_t k = 0; k < stats.checkpoints.size(); ++k) {
        const double s = static_cast<double>(stats.checkpoints[k]);
        if (s < window_lo || s > window_hi || s < 1.0) continue;
        if (!(stats.mse[k] > 0.0) || !std::isfinite(stats.mse[k])) continue;
        ls.push_back(std::log(s));
        lm.push_back(std::log(stats.mse[k]));
    }
    const int k = static_cast<int>(ls.size());
    if (k < 5) {
        throw InsufficientData("fit_rate: need >= 5 positive mse checkpoints in window");
    }

    double mx = 0.0, my = 0.0;
    for (int i = 0; i < k; ++i) {
        mx += ls[i];
        my += lm[i];
    }
    mx /= k;
    my /= k;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (int i = 0; i < k; ++i) {
        sxx += (ls[i] - mx) * (ls[i] - mx);
        sxy += (ls[i] - mx) * (lm[i] - my);
        syy += (lm[i] - my) * (lm[i] - my);
    }
    RateFit fit;
    fit.points = k;
    fit.exponent = sxy / sxx;
    double ss_res = 0.0;
    for (int i = 0; i < k; ++i) {
        const double pred = my + fit.exponent * (ls[i] - mx);
        ss_res += (lm[i] - pred) * (lm[i] - pred);
    }
    fit.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
    fit.stderr = (k > 2) ? std::sqrt(ss_res / (k - 2) / sxx) : 0.0;
    return fit;
}

Eigen::MatrixXd cauchy_gap(const SimScenario& scenario, const std::vector<long>& s_list,
                           const std::vector<long>& s2_list, long n_trials) {
    if (n_trials < 1) throw InvalidInput("cauchy_gap: n_trials must be >= 1");
    std::vector<long> all = s_list;
    all.insert(all.end(), s2_list.begin(), s2_list.end());
    const std::vector<long> cks = normalized_checkpoints(all, scenario.steps);
    auto index_of = [&](long s) {
        return static_cast<size_t>(
            std::lower_bound(cks.begin(), cks.end(), s) - cks.begin());
    };

    std::vector<TrialRecord> trials(static_cast<size_t>(n_trials));
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(configured_threads())
#endif
    for (long t = 0; t < n_trials; ++t) {
        trials[static_cast<size_t>(t)] = run_trial(scenario, cks, t);
    }

    long live = 0;
    for (const auto& t : trials) {
        if (!t.diverged) ++live;
    }
    Eigen::MatrixXd gaps(s_list.size(), s2_list.size());
    if (live == 0) {
        gaps.setConstant(std::numeric_limits<double>::infinity());
        return gaps;
    }
    for (size_t i = 0; i < s_list.size(); ++i) {
        for (size_t j = 0; j < s2_list.size(); ++j) {
            double acc = 0.0;
            for (const auto& t : trials) {
                if (t.diverged) continue;
                acc += (t.at_checkpoint[index_of(s2_list[j])] -
                        t.at_checkpoint[index_of(s_list[i])])
                           .squaredNorm();
            }
            gaps(static_cast<long>(i), static_cast<long>(j)) =
                acc / static_cast<double>(live);
        }
    }
    return gaps;
}

} // namespace linsa
