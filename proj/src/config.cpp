#include "linsa/config.hpp"

#include "linsa/errors.hpp"

#include <fstream>

namespace linsa {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& what) {
    throw ConfigError("config field '" + field + "': " + what);
}

Eigen::MatrixXd parse_matrix(const json& j, const std::string& field) {
    if (!j.is_array() || j.empty() || !j[0].is_array()) {
        fail(field, "expected a non-empty array of rows");
    }
    const size_t rows = j.size();
    const size_t cols = j[0].size();
    Eigen::MatrixXd M(rows, cols);
    for (size_t i = 0; i < rows; ++i) {
        if (!j[i].is_array() || j[i].size() != cols) {
            fail(field, "row " + std::to_string(i) + " has inconsistent length");
        }
        for (size_t k = 0; k < cols; ++k) {
            if (!j[i][k].is_number()) fail(field, "non-numeric entry");
            M(i, k) = j[i][k].get<double>();
        }
    }
    return M;
}

Eigen::VectorXd parse_vector(const json& j, const std::string& field) {
    if (!j.is_array()) fail(field, "expected an array");
    Eigen::VectorXd v(j.size());
    for (size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) fail(field, "non-numeric entry");
        v(i) = j[i].get<double>();
    }
    return v;
}

double get_num(const json& j, const std::string& field, double fallback,
               bool required = false) {
    if (!j.contains(field)) {
        if (required) fail(field, "missing");
        return fallback;
    }
    if (!j[field].is_number()) fail(field, "expected a number");
    return j[field].get<double>();
}

json matrix_to_json(const Eigen::MatrixXd& M) {
    json rows = json::array();
    for (int i = 0; i < M.rows(); ++i) {
        json row = json::array();
        for (int j2 = 0; j2 < M.cols(); ++j2) row.push_back(M(i, j2));
        rows.push_back(row);
    }
    return rows;
}

json vector_to_json(const Eigen::VectorXd& v) {
    json arr = json::array();
    for (int i = 0; i < v.size(); ++i) arr.push_back(v(i));
    return arr;
}

} // namespace

ScenarioConfig parse_config(const json& j) {
    ScenarioConfig cfg;
    if (j.contains("name")) cfg.name = j["name"].get<std::string>();

    if (j.contains("system") == j.contains("fj")) {
        throw ConfigError("exactly one of 'system' or 'fj' must be present");
    }

    if (j.contains("system")) {
        const json& sys = j["system"];
        if (!sys.contains("P")) fail("system.P", "missing");
        cfg.P = parse_matrix(sys["P"], "system.P");
        const int n = static_cast<int>(cfg.P->rows());
        cfg.u = sys.contains("u") ? parse_vector(sys["u"], "system.u")
                                  : Eigen::VectorXd::Zero(n).eval();
        cfg.x0 = sys.contains("x0") ? parse_vector(sys["x0"], "system.x0")
                                    : Eigen::VectorXd::Zero(n).eval();
    } else {
        const json& fjj = j["fj"];
        ScenarioConfig::FjBlock blk;
        if (!fjj.contains("lambda")) fail("fj.lambda", "missing");
        blk.lambda = parse_vector(fjj["lambda"], "fj.lambda");
        if (!fjj.contains("P")) fail("fj.P", "missing");
        blk.P = parse_matrix(fjj["P"], "fj.P");
        if (!fjj.contains("C")) fail("fj.C", "missing");
        blk.C = parse_matrix(fjj["C"], "fj.C");
        if (!fjj.contains("X0")) fail("fj.X0", "missing");
        blk.X0 = parse_matrix(fjj["X0"], "fj.X0");
        blk.sigma_lambda = get_num(fjj, "sigma_lambda", 0.0);
        blk.sigma_P = get_num(fjj, "sigma_P", 0.0);
        blk.sigma_C = get_num(fjj, "sigma_C", 0.0);
        cfg.fj = std::move(blk);
    }

    if (j.contains("ensemble")) {
        const json& ens = j["ensemble"];
        const std::string kind = ens.value("kind", "none");
        if (kind == "none") {
            cfg.noise_kind = NoiseKind::None;
        } else if (kind == "iid") {
            cfg.noise_kind = NoiseKind::IidEntrywise;
            cfg.sigma_P = get_num(ens, "sigma_P", 0.0);
            cfg.sigma_u = get_num(ens, "sigma_u", 0.0);
        } else if (kind == "state_dependent") {
            cfg.noise_kind = NoiseKind::StateDependent;
            cfg.noise_scale = get_num(ens, "noise_scale", 0.0, true);
            cfg.w_variance = get_num(ens, "w_variance", 0.0, true);
        } else {
            fail("ensemble.kind", "unknown kind '" + kind + "'");
        }
    }

    if (j.contains("gain")) {
        const json& g = j["gain"];
        const std::string kind = g.value("kind", "harmonic");
        if (kind == "harmonic") {
            cfg.gain = GainSchedule::harmonic();
        } else if (kind == "power_law") {
            const int sign = static_cast<int>(get_num(g, "sign", 1.0));
            cfg.gain = GainSchedule::power_law(sign, get_num(g, "alpha", 1.0, true),
                                               get_num(g, "beta", 1.0, true),
                                               get_num(g, "gamma", 1.0, true));
        } else if (kind == "custom") {
            if (!g.contains("values")) fail("gain.values", "missing");
            const Eigen::VectorXd v = parse_vector(g["values"], "gain.values");
            cfg.gain = GainSchedule::custom(
                std::vector<double>(v.data(), v.data() + v.size()));
        } else {
            fail("gain.kind", "unknown kind '" + kind + "'");
        }
    }

    if (j.contains("partition")) {
        Partition part;
        for (const auto& grp : j["partition"]) {
            std::vector<int> g;
            for (const auto& idx : grp) {
                if (!idx.is_number_integer()) fail("partition", "indices must be integers");
                g.push_back(idx.get<int>() - 1); // config uses 1-based agent ids
            }
            part.groups.push_back(std::move(g));
        }
        cfg.partition = std::move(part);
    }

    if (j.contains("run")) {
        const json& run = j["run"];
        cfg.steps = static_cast<long>(get_num(run, "steps", 1000.0));
        cfg.trials = static_cast<long>(get_num(run, "trials", 100.0));
        cfg.seed = static_cast<std::uint64_t>(get_num(run, "seed", 0.0));
        cfg.record_every = static_cast<long>(get_num(run, "record_every", 0.0));
        cfg.tol = get_num(run, "tol", 0.0);
        if (run.contains("checkpoints") && run["checkpoints"].is_array()) {
            for (const auto& c : run["checkpoints"]) {
                cfg.checkpoints.push_back(c.get<long>());
            }
        }
        const std::string mode = run.value("ref_mode", "auto");
        if (mode == "auto") cfg.ref_mode = ReferenceMode::Auto;
        else if (mode == "fixed") cfg.ref_mode = ReferenceMode::FixedLimit;
        else if (mode == "tail") cfg.ref_mode = ReferenceMode::TailProxy;
        else fail("run.ref_mode", "expected auto|fixed|tail");
    }

    if (j.contains("fit") && j["fit"].contains("window")) {
        const json& w = j["fit"]["window"];
        if (!w.is_array() || w.size() != 2) fail("fit.window", "expected [lo, hi]");
        cfg.fit_window = std::make_pair(w[0].get<double>(), w[1].get<double>());
    }

    if (j.contains("output") && j["output"].contains("dir")) {
        cfg.output_dir = j["output"]["dir"].get<std::string>();
    }

    cfg.validate();
    return cfg;
}

void ScenarioConfig::validate() const {
    if (steps < 1) throw ConfigError("config field 'run.steps': must be >= 1");
    if (trials < 2) throw ConfigError("config field 'run.trials': must be >= 2");
    if (record_every < 0) throw ConfigError("config field 'run.record_every': must be >= 0");
    if (tol < 0.0) throw ConfigError("config field 'run.tol': must be >= 0");
    gain.validate();

    if (is_fj()) {
        if (partition) throw ConfigError("partition is only meaningful for vector systems");
        return;
    }

    const int n = static_cast<int>(P->rows());
    if (P->rows() != P->cols()) throw ConfigError("config field 'system.P': must be square");
    if (!P->allFinite()) throw ConfigError("config field 'system.P': non-finite entries");
    if (u->size() != n) throw ConfigError("config field 'system.u': dimension mismatch");
    if (x0->size() != n) throw ConfigError("config field 'system.x0': dimension mismatch");
    if (partition) {
        try {
            partition->validate(n);
        } catch (const InvalidInput& e) {
            throw ConfigError(std::string("config field 'partition': ") + e.what());
        }
    }
    try {
        make_ensemble();
    } catch (const Error& e) {
        throw ConfigError(std::string("config field 'ensemble': ") + e.what());
    }
}

MatrixEnsemble ScenarioConfig::make_ensemble() const {
    switch (noise_kind) {
    case NoiseKind::None:
        return MatrixEnsemble::deterministic(*P, *u);
    case NoiseKind::IidEntrywise:
        return MatrixEnsemble::iid(*P, *u, sigma_P, sigma_u, seed);
    case NoiseKind::StateDependent:
        return MatrixEnsemble::state_dependent(*P, noise_scale, w_variance, seed);
    }
    throw ConfigError("unknown ensemble kind");
}

SimScenario ScenarioConfig::make_scenario() const {
    SimScenario sc;
    sc.ensemble = make_ensemble();
    sc.gain = gain;
    sc.x0 = *x0;
    sc.steps = steps;
    sc.partition = partition;
    sc.ref_mode = ref_mode;
    sc.tol = tol;
    return sc;
}

FjScenario ScenarioConfig::make_fj_scenario_config() const {
    const auto& blk = *fj;
    return make_fj_scenario(blk.lambda, blk.P, blk.C, blk.X0, blk.sigma_lambda,
                            blk.sigma_P, blk.sigma_C, seed, gain, steps);
}

ScenarioConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ConfigError("config parse error in " + path + ": " + e.what());
    }
    return parse_config(j);
}

json to_json(const ScenarioConfig& cfg) {
    json j;
    j["name"] = cfg.name;
    if (cfg.is_fj()) {
        json fjj;
        fjj["lambda"] = vector_to_json(cfg.fj->lambda);
        fjj["P"] = matrix_to_json(cfg.fj->P);
        fjj["C"] = matrix_to_json(cfg.fj->C);
        fjj["X0"] = matrix_to_json(cfg.fj->X0);
        fjj["sigma_lambda"] = cfg.fj->sigma_lambda;
        fjj["sigma_P"] = cfg.fj->sigma_P;
        fjj["sigma_C"] = cfg.fj->sigma_C;
        j["fj"] = fjj;
    } else {
        j["system"] = {{"P", matrix_to_json(*cfg.P)},
                       {"u", vector_to_json(*cfg.u)},
                       {"x0", vector_to_json(*cfg.x0)}};
    }

    json ens;
    ens["kind"] = to_string(cfg.noise_kind);
    if (cfg.noise_kind == NoiseKind::IidEntrywise) {
        ens["sigma_P"] = cfg.sigma_P;
        ens["sigma_u"] = cfg.sigma_u;
    } else if (cfg.noise_kind == NoiseKind::StateDependent) {
        ens["noise_scale"] = cfg.noise_scale;
        ens["w_variance"] = cfg.w_variance;
    }
    j["ensemble"] = ens;

    json g;
    switch (cfg.gain.kind) {
    case GainSchedule::Kind::Harmonic:
        g["kind"] = "harmonic";
        break;
    case GainSchedule::Kind::PowerLaw:
        g["kind"] = "power_law";
        g["sign"] = cfg.gain.sign;
        g["alpha"] = cfg.gain.alpha;
        g["beta"] = cfg.gain.beta;
        g["gamma"] = cfg.gain.gamma;
        break;
    case GainSchedule::Kind::Custom:
        g["kind"] = "custom";
        g["values"] = cfg.gain.values;
        break;
    }
    j["gain"] = g;

    if (cfg.partition) {
        json part = json::array();
        for (const auto& grp : cfg.partition->groups) {
            json pg = json::array();
            for (int idx : grp) pg.push_back(idx + 1);
            part.push_back(pg);
        }
        j["partition"] = part;
    }

    json run;
    run["steps"] = cfg.steps;
    run["trials"] = cfg.trials;
    run["seed"] = cfg.seed;
    run["record_every"] = cfg.record_every;
    if (cfg.tol > 0.0) run["tol"] = cfg.tol;
    if (!cfg.checkpoints.empty()) run["checkpoints"] = cfg.checkpoints;
    run["ref_mode"] = cfg.ref_mode == ReferenceMode::Auto        ? "auto"
                      : cfg.ref_mode == ReferenceMode::FixedLimit ? "fixed"
                                                                  : "tail";
    j["run"] = run;

    if (cfg.fit_window) {
        j["fit"] = {{"window", {cfg.fit_window->first, cfg.fit_window->second}}};
    }
    j["output"] = {{"dir", cfg.output_dir}};
    return j;
}

} // namespace linsa
