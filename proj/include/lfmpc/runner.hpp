#pragma once

#include <string>
#include <vector>

#include "lfmpc/config.hpp"
#include "lfmpc/estimator.hpp"
#include "lfmpc/scenario_mpc.hpp"

namespace lfmpc {

/// One control period of a closed-loop run: the state at t_k and the input
/// applied over [t_k, t_k + dt).
struct StepRecord {
    int step = 0;
    double t = 0.0;

    Eigen::Vector4d true_phys;  ///< px, py, v, psi (psi wrapped for logging)
    Eigen::VectorXd true_latent;
    double true_w = 0.0;

    Eigen::Vector4d measurement;

    Eigen::VectorXd est_mean;   ///< n_a
    Eigen::VectorXd est_bound2; ///< per-component 2 sigma
    double est_w = 0.0;
    double est_w_bound2 = 0.0;
    double ess = 0.0;

    Eigen::Vector2d input;

    double cost = 0.0;
    int iterations = 0;
    double residual = 0.0;
    double scenario_violation = 0.0; ///< worst predicted per-scenario violation
    int penalty_rounds = 0;
    bool degraded = false;
    bool used_fallback = false; ///< previous input applied instead of a degraded plan
    double solve_seconds = 0.0; ///< wall clock; logged to the timing sidecar

    double corridor_lower = 0.0; ///< corridor at the true x-position
    double corridor_upper = 0.0;
    double corridor_violation = 0.0; ///< truth-side, 0 when inside
    double velocity_violation = 0.0; ///< truth-side overshoot of the v box
};

struct RunSummary {
    bool reached_goal = false;
    bool failed = false;
    std::string failure;
    int steps = 0;
    double duration = 0.0;      ///< simulated seconds
    double wall_seconds = 0.0;
    double max_corridor_violation = 0.0;
    double max_velocity_overshoot = 0.0;
    double final_goal_distance = 0.0;
    int degraded_solves = 0;
};

struct RunLog {
    std::vector<StepRecord> rows;
    RunSummary summary;
    ExperimentConfig config;
};

/// Runs the closed loop: truth advance (exact latent + Euler physical),
/// measurement, particle filter step, receding-horizon solve, first input
/// applied to the truth. Terminates in the goal region or at max steps.
/// Deterministic per (config, seed); `seed` overrides config.run.seed.
/// Component errors mark the run failed and preserve the partial log.
RunLog run_experiment(const ExperimentConfig& config, std::uint64_t seed);

inline RunLog run_experiment(const ExperimentConfig& config) {
    return run_experiment(config, config.run.seed);
}

} // namespace lfmpc
