#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

namespace lfmpc::nlp {

/// Smooth scalar function of x; fills *grad when non-null.
using ObjectiveFn = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd* grad)>;

/// Inequality constraint handled by penalization. `penalty` is a smooth
/// measure that is zero iff the constraint is satisfied (here: sum of squared
/// hinges); `max_violation` reports the worst raw violation for logging.
struct SoftConstraint {
    ObjectiveFn penalty;
    std::function<double(const Eigen::VectorXd&)> max_violation;
    double weight = 1.0;
};

struct NlpProblem {
    int dim = 0;
    ObjectiveFn objective;
    Eigen::VectorXd lower; ///< per-variable box bounds
    Eigen::VectorXd upper;
    std::vector<SoftConstraint> soft;

    double merit(const Eigen::VectorXd& x, Eigen::VectorXd* grad) const;
    Eigen::VectorXd clip(const Eigen::VectorXd& x) const;
};

struct SolverOptions {
    double grad_tol = 1e-6; ///< projected-gradient infinity norm
    double step_tol = 1e-9; ///< step infinity norm
    int max_iters = 200;
};

enum class SolveStatus {
    Converged,        ///< tolerance met
    MaxIterations,    ///< budget exhausted, incumbent returned
    LineSearchStalled ///< no acceptable step found, incumbent returned
};

struct SolveReport {
    Eigen::VectorXd x;
    double objective = 0.0; ///< raw objective at x (penalties excluded)
    double merit = 0.0;     ///< objective plus weighted penalties
    int iterations = 0;
    double first_order_residual = 0.0; ///< projected-gradient infinity norm
    double max_soft_violation = 0.0;
    SolveStatus status = SolveStatus::Converged;

    bool degraded() const { return status == SolveStatus::LineSearchStalled; }
};

/// Projected quasi-Newton descent with backtracking line search on the merit
/// function (objective + weighted penalties). Box bounds are satisfied
/// exactly at every iterate; the merit sequence is non-increasing across
/// accepted steps; the result is a deterministic function of the inputs.
///
/// Throws NumericsError if the merit or its gradient is non-finite at x0
/// (after projection into the box).
SolveReport minimize(const NlpProblem& problem, const Eigen::VectorXd& x0,
                     const SolverOptions& options = {});

/// Max relative error between the analytic gradient of the merit function and
/// central finite differences with step h, evaluated at x.
double grad_check(const NlpProblem& problem, const Eigen::VectorXd& x, double h);

/// Wraps a gradient-free function with central finite differences so it can
/// be used as an ObjectiveFn.
ObjectiveFn with_fd_gradient(std::function<double(const Eigen::VectorXd&)> f, double h = 1e-6);

} // namespace lfmpc::nlp
