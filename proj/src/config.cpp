#include "lfmpc/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "lfmpc/errors.hpp"
#include "lfmpc/estimator.hpp"

namespace lfmpc {

namespace {

using nlohmann::json;

// Tracks which keys of one JSON object have been consumed so leftovers can be
// rejected with their full path.
class StrictObject {
public:
    StrictObject(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) {
            throw ConfigError("config: '" + path_ + "' must be an object");
        }
    }

    bool has(const std::string& key) {
        seen_.insert(key);
        return j_.contains(key);
    }

    template <typename T>
    void get(const std::string& key, T& out) {
        if (!has(key)) {
            return;
        }
        try {
            out = j_.at(key).get<T>();
        } catch (const json::exception& e) {
            throw ConfigError("config: bad value at '" + path_ + key + "': " + e.what());
        }
    }

    template <int N>
    void get_vec(const std::string& key, Eigen::Matrix<double, N, 1>& out) {
        if (!has(key)) {
            return;
        }
        const json& arr = j_.at(key);
        if (!arr.is_array() || arr.size() != N) {
            throw ConfigError("config: '" + path_ + key + "' must be an array of length " +
                              std::to_string(N));
        }
        for (int i = 0; i < N; ++i) {
            out(i) = arr.at(i).get<double>();
        }
    }

    const json& child(const std::string& key) {
        seen_.insert(key);
        return j_.at(key);
    }

    std::string child_path(const std::string& key) const { return path_ + key + "."; }

    void finish() const {
        for (const auto& item : j_.items()) {
            if (seen_.find(item.key()) == seen_.end()) {
                throw ConfigError("config: unknown key '" + path_ + item.key() + "'");
            }
        }
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

KernelSpec parse_kernel(const json& j, const std::string& path) {
    KernelSpec k;
    StrictObject o(j, path);
    o.get("sigma2", k.sigma2);
    o.get("ell", k.ell);
    o.get("nu", k.nu);
    o.finish();
    return k;
}

json kernel_to_json(const KernelSpec& k) {
    return {{"sigma2", k.sigma2}, {"ell", k.ell}, {"nu", k.nu}};
}

template <typename Derived>
json vec_to_json(const Eigen::MatrixBase<Derived>& v) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        arr.push_back(v(i));
    }
    return arr;
}

} // namespace

void ExperimentConfig::validate() const {
    kernel.validate();
    if (truth_kernel.has_value()) {
        truth_kernel->validate();
    }
    if (model.length <= 0.0) {
        throw ConfigError("config: model.length must be positive");
    }
    if (model.disturbance_state < 0 || model.disturbance_state > 3) {
        throw ConfigError("config: model.disturbance_state must index a bicycle state");
    }
    if ((model.r_diag.array() < 0.0).any()) {
        throw ConfigError("config: model.measurement_noise_diag must be nonnegative");
    }
    if (model.substeps < 1) {
        throw ConfigError("config: model.substeps must be >= 1");
    }
    if (filter.particles < 1) {
        throw ConfigError("config: filter.particles must be >= 1");
    }
    if (filter.resample != "always" && filter.resample != "ess") {
        throw ConfigError("config: filter.resample must be 'always' or 'ess'");
    }
    if (run.max_steps < 1) {
        throw ConfigError("config: run.max_steps must be >= 1");
    }
    if (mpc.v_min > mpc.v_max || mpc.a_max <= 0.0 || mpc.delta_max_deg <= 0.0 ||
        mpc.delta_max_deg >= 90.0) {
        throw ConfigError("config: invalid mpc bounds");
    }
    if (track.period <= 0.0 || track.half_width <= 0.0 || track.x_min >= track.x_max) {
        throw ConfigError("config: invalid track geometry");
    }
    mpc_config().validate(4, 2);
}

MpcConfig ExperimentConfig::mpc_config() const {
    MpcConfig cfg;
    cfg.horizon = mpc.horizon;
    cfg.n_scenarios = mpc.n_scenarios;
    cfg.dt = mpc.dt;
    cfg.Q = mpc.q_diag.asDiagonal();
    cfg.Qf = mpc.qf_diag.asDiagonal();
    cfg.R = mpc.r_diag.asDiagonal();
    cfg.goal = mpc.goal;
    const double delta_max = mpc.delta_max_deg * M_PI / 180.0;
    cfg.u_lower = Eigen::Vector2d(-mpc.a_max, -delta_max);
    cfg.u_upper = Eigen::Vector2d(mpc.a_max, delta_max);
    cfg.epsilon = mpc.epsilon;
    cfg.goal_radius = mpc.goal_radius;
    cfg.solver = mpc.solver;
    cfg.state_constraints = velocity_constraints(mpc.v_min, mpc.v_max);
    for (auto& c : corridor_constraints(track)) {
        cfg.state_constraints.push_back(std::move(c));
    }
    return cfg;
}

FilterOptions ExperimentConfig::filter_options() const {
    FilterOptions opts;
    opts.n_particles = filter.particles;
    opts.policy = filter.resample == "always" ? FilterOptions::Resample::Always
                                              : FilterOptions::Resample::EssThreshold;
    opts.ess_threshold = filter.ess_threshold;
    opts.jitter_init = filter.jitter_init;
    return opts;
}

ExperimentConfig default_config() { return {}; }

ExperimentConfig config_from_json(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: JSON parse failure: ") + e.what());
    }

    ExperimentConfig c;
    StrictObject root(j, "");

    if (root.has("kernel")) {
        c.kernel = parse_kernel(root.child("kernel"), "kernel.");
    }
    if (root.has("truth_kernel")) {
        c.truth_kernel = parse_kernel(root.child("truth_kernel"), "truth_kernel.");
    }
    if (root.has("model")) {
        StrictObject o(root.child("model"), "model.");
        o.get("length", c.model.length);
        o.get("disturbance_state", c.model.disturbance_state);
        o.get_vec<4>("measurement_noise_diag", c.model.r_diag);
        o.get("substeps", c.model.substeps);
        o.finish();
    }
    if (root.has("mpc")) {
        StrictObject o(root.child("mpc"), "mpc.");
        o.get("horizon", c.mpc.horizon);
        o.get("scenarios", c.mpc.n_scenarios);
        o.get("dt", c.mpc.dt);
        o.get_vec<4>("q_diag", c.mpc.q_diag);
        o.get_vec<4>("qf_diag", c.mpc.qf_diag);
        o.get_vec<2>("r_diag", c.mpc.r_diag);
        o.get_vec<4>("goal", c.mpc.goal);
        o.get("a_max", c.mpc.a_max);
        o.get("delta_max_deg", c.mpc.delta_max_deg);
        o.get("v_min", c.mpc.v_min);
        o.get("v_max", c.mpc.v_max);
        o.get("epsilon", c.mpc.epsilon);
        o.get("goal_radius", c.mpc.goal_radius);
        if (o.has("solver")) {
            StrictObject s(o.child("solver"), "mpc.solver.");
            s.get("grad_tol", c.mpc.solver.grad_tol);
            s.get("step_tol", c.mpc.solver.step_tol);
            s.get("max_iters", c.mpc.solver.max_iters);
            s.get("penalty_weight", c.mpc.solver.penalty_weight);
            s.get("penalty_factor", c.mpc.solver.penalty_factor);
            s.get("max_penalty_rounds", c.mpc.solver.max_penalty_rounds);
            s.get("violation_tol", c.mpc.solver.violation_tol);
            s.get("accept_residual", c.mpc.solver.accept_residual);
            s.finish();
        }
        o.finish();
    }
    if (root.has("track")) {
        StrictObject o(root.child("track"), "track.");
        o.get("amplitude", c.track.amplitude);
        o.get("period", c.track.period);
        o.get("half_width", c.track.half_width);
        o.get("x_min", c.track.x_min);
        o.get("x_max", c.track.x_max);
        o.finish();
    }
    if (root.has("filter")) {
        StrictObject o(root.child("filter"), "filter.");
        o.get("particles", c.filter.particles);
        o.get("resample", c.filter.resample);
        o.get("ess_threshold", c.filter.ess_threshold);
        o.get("jitter_init", c.filter.jitter_init);
        o.finish();
    }
    if (root.has("run")) {
        StrictObject o(root.child("run"), "run.");
        o.get("seed", c.run.seed);
        o.get("max_steps", c.run.max_steps);
        o.get_vec<4>("start", c.run.start);
        o.finish();
    }
    root.finish();

    c.validate();
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("config: cannot open '" + path + "'");
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return config_from_json(buf.str());
}

std::string config_to_json(const ExperimentConfig& c) {
    json j;
    j["kernel"] = kernel_to_json(c.kernel);
    if (c.truth_kernel.has_value()) {
        j["truth_kernel"] = kernel_to_json(*c.truth_kernel);
    }
    j["model"] = {{"length", c.model.length},
                  {"disturbance_state", c.model.disturbance_state},
                  {"measurement_noise_diag", vec_to_json(c.model.r_diag)},
                  {"substeps", c.model.substeps}};
    j["mpc"] = {{"horizon", c.mpc.horizon},
                {"scenarios", c.mpc.n_scenarios},
                {"dt", c.mpc.dt},
                {"q_diag", vec_to_json(c.mpc.q_diag)},
                {"qf_diag", vec_to_json(c.mpc.qf_diag)},
                {"r_diag", vec_to_json(c.mpc.r_diag)},
                {"goal", vec_to_json(c.mpc.goal)},
                {"a_max", c.mpc.a_max},
                {"delta_max_deg", c.mpc.delta_max_deg},
                {"v_min", c.mpc.v_min},
                {"v_max", c.mpc.v_max},
                {"epsilon", c.mpc.epsilon},
                {"goal_radius", c.mpc.goal_radius},
                {"solver",
                 {{"grad_tol", c.mpc.solver.grad_tol},
                  {"step_tol", c.mpc.solver.step_tol},
                  {"max_iters", c.mpc.solver.max_iters},
                  {"penalty_weight", c.mpc.solver.penalty_weight},
                  {"penalty_factor", c.mpc.solver.penalty_factor},
                  {"max_penalty_rounds", c.mpc.solver.max_penalty_rounds},
                  {"violation_tol", c.mpc.solver.violation_tol},
                  {"accept_residual", c.mpc.solver.accept_residual}}}};
    j["track"] = {{"amplitude", c.track.amplitude},
                  {"period", c.track.period},
                  {"half_width", c.track.half_width},
                  {"x_min", c.track.x_min},
                  {"x_max", c.track.x_max}};
    j["filter"] = {{"particles", c.filter.particles},
                   {"resample", c.filter.resample},
                   {"ess_threshold", c.filter.ess_threshold},
                   {"jitter_init", c.filter.jitter_init}};
    j["run"] = {{"seed", c.run.seed},
                {"max_steps", c.run.max_steps},
                {"start", vec_to_json(c.run.start)}};
    return j.dump(2) + "\n";
}

} // namespace lfmpc
