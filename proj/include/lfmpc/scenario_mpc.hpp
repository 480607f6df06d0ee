#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "lfmpc/lfm.hpp"
#include "lfmpc/nlp.hpp"

namespace lfmpc {

/// Inequality g(x) <= 0 on the physical state. Fills *grad (length n_x) when
/// non-null.
struct StateConstraint {
    std::string name;
    std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd* grad)> g;
};

struct SolverSettings {
    double grad_tol = 1e-6;
    double step_tol = 1e-9;
    int max_iters = 200;
    /// Initial weight on the squared-hinge state-constraint penalty.
    double penalty_weight = 1e3;
    /// Weight multiplier per feasibility-restoration round.
    double penalty_factor = 10.0;
    /// Extra solves allowed when the soft violation exceeds violation_tol.
    int max_penalty_rounds = 3;
    /// Soft violation (natural units) below which a solve counts as feasible.
    double violation_tol = 1e-3;
    /// A solve that exhausts its budget with a first-order residual at or
    /// below this is still treated as usable; above it, the plan is flagged
    /// degraded and the harness falls back to the previous input.
    double accept_residual = 1e-2;
};

/// Horizon problem data: cost weights, goal, input box, state constraints.
struct MpcConfig {
    int horizon = 7;      ///< N
    int n_scenarios = 150; ///< Ns
    double dt = 0.2;

    Eigen::MatrixXd Q;  ///< n_x x n_x stage state weight
    Eigen::MatrixXd Qf; ///< n_x x n_x terminal state weight
    Eigen::MatrixXd R;  ///< n_u x n_u input weight
    Eigen::VectorXd goal;

    Eigen::VectorXd u_lower;
    Eigen::VectorXd u_upper;
    std::vector<StateConstraint> state_constraints;

    double epsilon = 0.05;    ///< target violation level (reporting only)
    double goal_radius = 0.3; ///< stop tolerance (m)
    SolverSettings solver;

    void validate(int n_x, int n_u) const;
};

/// N_s sampled noise sequences over the horizon; regenerating with the same
/// seed reproduces the draws exactly.
struct ScenarioSet {
    Eigen::MatrixXd draws; ///< Ns x N, each entry ~ N(0, q dt)
    std::uint64_t seed = 0;

    int count() const { return static_cast<int>(draws.rows()); }
};

ScenarioSet sample_scenarios(const LatentSde& latent, const MpcConfig& cfg, std::uint64_t seed);

/// Forward Euler-Maruyama rollout from xbar0 under the input sequence
/// (N x n_u) and one scenario's draws (length N); returns the (N+1) x n_a
/// trajectory, row per step.
Eigen::MatrixXd rollout(const AugmentedModel& model, const Eigen::VectorXd& xbar0,
                        const Eigen::MatrixXd& inputs, const Eigen::VectorXd& scenario,
                        double dt);

/// Sum over scenarios and steps of the quadratic stage and terminal costs;
/// only physical states are weighted (the latent block is uncontrollable and
/// carries no cost).
double scenario_objective(const std::vector<Eigen::MatrixXd>& trajectories,
                          const Eigen::MatrixXd& inputs, const MpcConfig& cfg);

struct SolverStats {
    int iterations = 0;
    double first_order_residual = 0.0;
    double max_violation = 0.0; ///< worst per-scenario state-constraint violation
    int penalty_rounds = 0;
    bool converged = false;
    bool degraded = false;
    double solve_seconds = 0.0;
};

struct ControlPlan {
    Eigen::MatrixXd inputs; ///< N x n_u, every row inside the input box
    double cost = 0.0;      ///< scenario objective at the returned inputs
    SolverStats stats;
};

/// Builds the deterministic scenario program as an NLP over the stacked input
/// sequence: quadratic scenario cost (normalized by Ns for conditioning),
/// box input bounds, squared-hinge penalties for per-scenario state
/// constraints at steps 1..N. Gradients are computed by a discrete adjoint
/// sweep through the rollout.
nlp::NlpProblem build_scenario_nlp(const AugmentedModel& model, const Eigen::VectorXd& xbar0,
                                   const MpcConfig& cfg, const ScenarioSet& scenarios,
                                   double penalty_weight);

/// Solves the scenario program from `warm_start` (zeros when absent),
/// escalating the penalty weight while the state constraints stay violated.
/// Deterministic given its arguments.
ControlPlan solve(const AugmentedModel& model, const Eigen::VectorXd& xbar_hat0,
                  const MpcConfig& cfg, const ScenarioSet& scenarios,
                  const Eigen::MatrixXd* warm_start = nullptr);

/// Receding-horizon driver: fresh scenarios per step (seed derived from the
/// run seed and step index), warm start from the previous solution shifted by
/// one step with the last input repeated, first input returned.
class MpcController {
public:
    MpcController(AugmentedModel model, MpcConfig cfg, std::uint64_t seed);

    struct StepResult {
        Eigen::VectorXd input; ///< u_0*, always inside the input box
        ControlPlan plan;
        std::uint64_t scenario_seed = 0;
    };

    StepResult step(const Eigen::VectorXd& xbar_hat);
    StepResult step_with_seed(const Eigen::VectorXd& xbar_hat, std::uint64_t scenario_seed);

    /// Clears the warm start and step counter.
    void reset();

    const MpcConfig& config() const { return cfg_; }
    const AugmentedModel& model() const { return model_; }
    int steps_taken() const { return step_count_; }

private:
    AugmentedModel model_;
    MpcConfig cfg_;
    std::uint64_t seed_;
    int step_count_ = 0;
    std::optional<Eigen::MatrixXd> warm_start_;
};

} // namespace lfmpc
