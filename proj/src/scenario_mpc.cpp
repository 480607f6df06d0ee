#include "lfmpc/scenario_mpc.hpp"

#include <chrono>
#include <cmath>
#include <utility>

#include "lfmpc/errors.hpp"
#include "lfmpc/rng.hpp"

namespace lfmpc {

namespace {

Eigen::MatrixXd unstack_inputs(const Eigen::VectorXd& theta, int horizon, int n_u) {
    Eigen::MatrixXd u(horizon, n_u);
    for (int k = 0; k < horizon; ++k) {
        u.row(k) = theta.segment(k * n_u, n_u).transpose();
    }
    return u;
}

Eigen::VectorXd stack_inputs(const Eigen::MatrixXd& u) {
    Eigen::VectorXd theta(u.rows() * u.cols());
    for (Eigen::Index k = 0; k < u.rows(); ++k) {
        theta.segment(k * u.cols(), u.cols()) = u.row(k).transpose();
    }
    return theta;
}

// Per-stage cost/penalty terms attached to a rollout. `stage` is evaluated at
// (k, xbar_k, u_k) for k = 0..N-1 and `terminal` at xbar_N; both add their
// state/input gradients into the supplied buffers when non-null.
struct StageTerms {
    std::function<double(int k, const Eigen::VectorXd& xbar, const Eigen::VectorXd& u,
                         Eigen::VectorXd* gx, Eigen::VectorXd* gu)>
        stage;
    std::function<double(const Eigen::VectorXd& xbar, Eigen::VectorXd* gx)> terminal;
};

// Value of the stage terms along one scenario rollout; when grad_u is
// non-null, accumulates d(value)/d(inputs) into it by a reverse (adjoint)
// sweep using the augmented-drift Jacobians.
double sweep_scenario(const AugmentedModel& model, const Eigen::VectorXd& xbar0,
                      const Eigen::MatrixXd& inputs, const Eigen::VectorXd& draws, double dt,
                      const StageTerms& terms, Eigen::MatrixXd* grad_u) {
    const int n = static_cast<int>(inputs.rows());
    const int n_a = model.n_a;

    Eigen::MatrixXd traj(n + 1, n_a);
    traj.row(0) = xbar0.transpose();
    Eigen::VectorXd x = xbar0;
    double value = 0.0;
    for (int k = 0; k < n; ++k) {
        value += terms.stage(k, x, inputs.row(k).transpose(), nullptr, nullptr);
        x = em_step(model, x, inputs.row(k).transpose(), draws(k), dt);
        traj.row(k + 1) = x.transpose();
    }
    value += terms.terminal(x, nullptr);

    if (grad_u != nullptr) {
        Eigen::VectorXd lambda = Eigen::VectorXd::Zero(n_a);
        terms.terminal(traj.row(n).transpose(), &lambda);
        Eigen::MatrixXd jx(n_a, n_a), ju(n_a, model.n_u);
        for (int k = n - 1; k >= 0; --k) {
            const Eigen::VectorXd xk = traj.row(k).transpose();
            const Eigen::VectorXd uk = inputs.row(k).transpose();
            Eigen::VectorXd sx = Eigen::VectorXd::Zero(n_a);
            Eigen::VectorXd su = Eigen::VectorXd::Zero(model.n_u);
            terms.stage(k, xk, uk, &sx, &su);
            model.drift_jacobians(xk, uk, jx, ju);
            grad_u->row(k) += (su + dt * ju.transpose() * lambda).transpose();
            lambda = sx + lambda + dt * jx.transpose() * lambda;
        }
    }
    return value;
}

StageTerms quadratic_cost_terms(const MpcConfig& cfg, int n_x) {
    StageTerms terms;
    terms.stage = [&cfg, n_x](int, const Eigen::VectorXd& xbar, const Eigen::VectorXd& u,
                              Eigen::VectorXd* gx, Eigen::VectorXd* gu) {
        const Eigen::VectorXd err = xbar.head(n_x) - cfg.goal;
        const double value = err.dot(cfg.Q * err) + u.dot(cfg.R * u);
        if (gx != nullptr) {
            gx->head(n_x) += 2.0 * (cfg.Q * err);
        }
        if (gu != nullptr) {
            *gu += 2.0 * (cfg.R * u);
        }
        return value;
    };
    terms.terminal = [&cfg, n_x](const Eigen::VectorXd& xbar, Eigen::VectorXd* gx) {
        const Eigen::VectorXd err = xbar.head(n_x) - cfg.goal;
        const double value = err.dot(cfg.Qf * err);
        if (gx != nullptr) {
            gx->head(n_x) += 2.0 * (cfg.Qf * err);
        }
        return value;
    };
    return terms;
}

// Squared-hinge sum over all state constraints at one state; adds the chain
// rule contribution into gx.
double hinge_penalty_at(const MpcConfig& cfg, int n_x, const Eigen::VectorXd& xbar,
                        Eigen::VectorXd* gx) {
    double value = 0.0;
    Eigen::VectorXd cg(n_x);
    for (const auto& c : cfg.state_constraints) {
        const double v = c.g(xbar.head(n_x), gx != nullptr ? &cg : nullptr);
        if (v > 0.0) {
            value += v * v;
            if (gx != nullptr) {
                gx->head(n_x) += 2.0 * v * cg;
            }
        }
    }
    return value;
}

// State constraints are enforced at steps 1..N; step 0 is the fixed initial
// state the optimizer cannot influence.
StageTerms penalty_terms(const MpcConfig& cfg, int n_x) {
    StageTerms terms;
    terms.stage = [&cfg, n_x](int k, const Eigen::VectorXd& xbar, const Eigen::VectorXd&,
                              Eigen::VectorXd* gx, Eigen::VectorXd*) {
        return k == 0 ? 0.0 : hinge_penalty_at(cfg, n_x, xbar, gx);
    };
    terms.terminal = [&cfg, n_x](const Eigen::VectorXd& xbar, Eigen::VectorXd* gx) {
        return hinge_penalty_at(cfg, n_x, xbar, gx);
    };
    return terms;
}

double max_violation_at(const MpcConfig& cfg, int n_x, const Eigen::VectorXd& xbar) {
    double worst = 0.0;
    for (const auto& c : cfg.state_constraints) {
        worst = std::max(worst, c.g(xbar.head(n_x), nullptr));
    }
    return worst;
}

} // namespace

void MpcConfig::validate(int n_x, int n_u) const {
    if (horizon < 1) {
        throw ConfigError("MpcConfig: horizon must be >= 1");
    }
    if (n_scenarios < 1) {
        throw ConfigError("MpcConfig: n_scenarios must be >= 1");
    }
    if (!(dt > 0.0)) {
        throw ConfigError("MpcConfig: dt must be positive");
    }
    if (Q.rows() != n_x || Q.cols() != n_x || Qf.rows() != n_x || Qf.cols() != n_x) {
        throw ConfigError("MpcConfig: Q and Qf must be n_x x n_x");
    }
    if (R.rows() != n_u || R.cols() != n_u) {
        throw ConfigError("MpcConfig: R must be n_u x n_u");
    }
    if (goal.size() != n_x) {
        throw ConfigError("MpcConfig: goal must have length n_x");
    }
    if (u_lower.size() != n_u || u_upper.size() != n_u ||
        (u_lower.array() > u_upper.array()).any()) {
        throw ConfigError("MpcConfig: invalid input bounds");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> rq(R);
    if (rq.eigenvalues().minCoeff() <= 0.0) {
        throw ConfigError("MpcConfig: R must be positive definite");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> qq(Q);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> qfq(Qf);
    if (qq.eigenvalues().minCoeff() < -1e-12 || qfq.eigenvalues().minCoeff() < -1e-12) {
        throw ConfigError("MpcConfig: Q and Qf must be positive semidefinite");
    }
}

ScenarioSet sample_scenarios(const LatentSde& latent, const MpcConfig& cfg, std::uint64_t seed) {
    const double stddev = std::sqrt(latent.q * cfg.dt);
    ScenarioSet set;
    set.seed = seed;
    set.draws.resize(cfg.n_scenarios, cfg.horizon);
    for (int i = 0; i < cfg.n_scenarios; ++i) {
        Rng rng(mix_seed({seed, static_cast<std::uint64_t>(i)}));
        for (int k = 0; k < cfg.horizon; ++k) {
            set.draws(i, k) = stddev * rng.normal();
        }
    }
    return set;
}

Eigen::MatrixXd rollout(const AugmentedModel& model, const Eigen::VectorXd& xbar0,
                        const Eigen::MatrixXd& inputs, const Eigen::VectorXd& scenario,
                        double dt) {
    if (inputs.rows() != scenario.size()) {
        throw ConfigError("rollout: inputs and scenario must have the same length");
    }
    const int n = static_cast<int>(inputs.rows());
    Eigen::MatrixXd traj(n + 1, model.n_a);
    traj.row(0) = xbar0.transpose();
    Eigen::VectorXd x = xbar0;
    for (int k = 0; k < n; ++k) {
        x = em_step(model, x, inputs.row(k).transpose(), scenario(k), dt);
        traj.row(k + 1) = x.transpose();
    }
    return traj;
}

double scenario_objective(const std::vector<Eigen::MatrixXd>& trajectories,
                          const Eigen::MatrixXd& inputs, const MpcConfig& cfg) {
    const int n = static_cast<int>(inputs.rows());
    const int n_x = static_cast<int>(cfg.goal.size());
    double total = 0.0;
    for (const auto& traj : trajectories) {
        for (int k = 0; k < n; ++k) {
            const Eigen::VectorXd err = traj.row(k).head(n_x).transpose() - cfg.goal;
            const Eigen::VectorXd u = inputs.row(k).transpose();
            total += err.dot(cfg.Q * err) + u.dot(cfg.R * u);
        }
        const Eigen::VectorXd err = traj.row(n).head(n_x).transpose() - cfg.goal;
        total += err.dot(cfg.Qf * err);
    }
    return total;
}

nlp::NlpProblem build_scenario_nlp(const AugmentedModel& model, const Eigen::VectorXd& xbar0,
                                   const MpcConfig& cfg, const ScenarioSet& scenarios,
                                   double penalty_weight) {
    const int n_u = model.n_u;
    const int n_x = model.n_x;
    const int horizon = cfg.horizon;
    const int ns = scenarios.count();
    const double scale = 1.0 / ns; // conditioning only; argmin unchanged

    nlp::NlpProblem problem;
    problem.dim = horizon * n_u;
    problem.lower = cfg.u_lower.replicate(horizon, 1);
    problem.upper = cfg.u_upper.replicate(horizon, 1);

    problem.objective = [&model, &cfg, xbar0, &scenarios, horizon, n_u, n_x,
                         scale](const Eigen::VectorXd& theta, Eigen::VectorXd* grad) {
        const Eigen::MatrixXd u = unstack_inputs(theta, horizon, n_u);
        const StageTerms terms = quadratic_cost_terms(cfg, n_x);
        Eigen::MatrixXd grad_u = Eigen::MatrixXd::Zero(horizon, n_u);
        double total = 0.0;
        for (int i = 0; i < scenarios.count(); ++i) {
            total += sweep_scenario(model, xbar0, u, scenarios.draws.row(i).transpose(),
                                    cfg.dt, terms, grad != nullptr ? &grad_u : nullptr);
        }
        if (grad != nullptr) {
            *grad = scale * stack_inputs(grad_u);
        }
        return scale * total;
    };

    nlp::SoftConstraint soft;
    soft.weight = penalty_weight;
    soft.penalty = [&model, &cfg, xbar0, &scenarios, horizon, n_u, n_x,
                    scale](const Eigen::VectorXd& theta, Eigen::VectorXd* grad) {
        const Eigen::MatrixXd u = unstack_inputs(theta, horizon, n_u);
        const StageTerms terms = penalty_terms(cfg, n_x);
        Eigen::MatrixXd grad_u = Eigen::MatrixXd::Zero(horizon, n_u);
        double total = 0.0;
        for (int i = 0; i < scenarios.count(); ++i) {
            total += sweep_scenario(model, xbar0, u, scenarios.draws.row(i).transpose(),
                                    cfg.dt, terms, grad != nullptr ? &grad_u : nullptr);
        }
        if (grad != nullptr) {
            *grad = scale * stack_inputs(grad_u);
        }
        return scale * total;
    };
    soft.max_violation = [&model, &cfg, xbar0, &scenarios, horizon,
                          n_u, n_x](const Eigen::VectorXd& theta) {
        const Eigen::MatrixXd u = unstack_inputs(theta, horizon, n_u);
        double worst = 0.0;
        for (int i = 0; i < scenarios.count(); ++i) {
            const Eigen::MatrixXd traj =
                rollout(model, xbar0, u, scenarios.draws.row(i).transpose(), cfg.dt);
            for (int k = 1; k <= horizon; ++k) {
                worst = std::max(worst, max_violation_at(cfg, n_x, traj.row(k).transpose()));
            }
        }
        return worst;
    };
    if (!cfg.state_constraints.empty()) {
        problem.soft.push_back(std::move(soft));
    }
    return problem;
}

ControlPlan solve(const AugmentedModel& model, const Eigen::VectorXd& xbar_hat0,
                  const MpcConfig& cfg, const ScenarioSet& scenarios,
                  const Eigen::MatrixXd* warm_start) {
    cfg.validate(model.n_x, model.n_u);
    if (!xbar_hat0.allFinite() || xbar_hat0.size() != model.n_a) {
        throw ConfigError("solve: initial state estimate must be finite with length n_a");
    }
    const auto t_start = std::chrono::steady_clock::now();

    Eigen::MatrixXd u0 = warm_start != nullptr
                             ? *warm_start
                             : Eigen::MatrixXd::Zero(cfg.horizon, model.n_u);
    nlp::SolverOptions options;
    options.grad_tol = cfg.solver.grad_tol;
    options.step_tol = cfg.solver.step_tol;
    options.max_iters = cfg.solver.max_iters;

    nlp::NlpProblem problem =
        build_scenario_nlp(model, xbar_hat0, cfg, scenarios, cfg.solver.penalty_weight);
    Eigen::VectorXd theta = problem.clip(stack_inputs(u0));

    nlp::SolveReport report;
    int rounds = 0;
    int total_iterations = 0;
    for (;; ++rounds) {
        report = nlp::minimize(problem, theta, options);
        total_iterations += report.iterations;
        theta = report.x;
        if (problem.soft.empty() || report.max_soft_violation <= cfg.solver.violation_tol ||
            rounds >= cfg.solver.max_penalty_rounds) {
            break;
        }
        problem.soft.front().weight *= cfg.solver.penalty_factor;
    }

    ControlPlan plan;
    plan.inputs = unstack_inputs(problem.clip(theta), cfg.horizon, model.n_u);
    // Exact (unnormalized) scenario objective at the returned plan.
    std::vector<Eigen::MatrixXd> trajs;
    trajs.reserve(scenarios.count());
    for (int i = 0; i < scenarios.count(); ++i) {
        trajs.push_back(
            rollout(model, xbar_hat0, plan.inputs, scenarios.draws.row(i).transpose(), cfg.dt));
    }
    plan.cost = scenario_objective(trajs, plan.inputs, cfg);

    plan.stats.iterations = total_iterations;
    plan.stats.first_order_residual = report.first_order_residual;
    plan.stats.max_violation = report.max_soft_violation;
    plan.stats.penalty_rounds = rounds;
    plan.stats.converged = report.status == nlp::SolveStatus::Converged;
    plan.stats.degraded =
        !plan.stats.converged && report.first_order_residual > cfg.solver.accept_residual;
    plan.stats.solve_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return plan;
}

MpcController::MpcController(AugmentedModel model, MpcConfig cfg, std::uint64_t seed)
    : model_(std::move(model)), cfg_(std::move(cfg)), seed_(seed) {
    cfg_.validate(model_.n_x, model_.n_u);
}

MpcController::StepResult MpcController::step(const Eigen::VectorXd& xbar_hat) {
    return step_with_seed(
        xbar_hat, mix_seed({seed_, static_cast<std::uint64_t>(RngDomain::Scenario),
                            static_cast<std::uint64_t>(step_count_)}));
}

MpcController::StepResult MpcController::step_with_seed(const Eigen::VectorXd& xbar_hat,
                                                        std::uint64_t scenario_seed) {
    const ScenarioSet scenarios = sample_scenarios(model_.latent, cfg_, scenario_seed);

    std::optional<Eigen::MatrixXd> warm;
    if (warm_start_.has_value()) {
        // Shift by one step, repeating the last input.
        Eigen::MatrixXd shifted = *warm_start_;
        shifted.topRows(cfg_.horizon - 1) = warm_start_->bottomRows(cfg_.horizon - 1);
        warm = shifted;
    }

    StepResult result;
    result.scenario_seed = scenario_seed;
    result.plan = solve(model_, xbar_hat, cfg_, scenarios, warm ? &*warm : nullptr);
    result.input = result.plan.inputs.row(0).transpose();
    warm_start_ = result.plan.inputs;
    ++step_count_;
    return result;
}

void MpcController::reset() {
    warm_start_.reset();
    step_count_ = 0;
}

} // namespace lfmpc
