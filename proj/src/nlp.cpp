#include "lfmpc/nlp.hpp"

#include <cmath>
#include <utility>

#include "lfmpc/errors.hpp"

namespace lfmpc::nlp {

namespace {

constexpr double kArmijoSlope = 1e-4;
constexpr double kBacktrackFactor = 0.5;
constexpr int kMaxBacktracks = 50;

// Infinity norm of x - clip(x - g): zero exactly at a box-constrained
// stationary point.
double projected_gradient_norm(const NlpProblem& p, const Eigen::VectorXd& x,
                               const Eigen::VectorXd& g) {
    return (x - p.clip(x - g)).lpNorm<Eigen::Infinity>();
}

} // namespace

double NlpProblem::merit(const Eigen::VectorXd& x, Eigen::VectorXd* grad) const {
    double value = objective(x, grad);
    for (const auto& c : soft) {
        if (grad != nullptr) {
            Eigen::VectorXd pg(dim);
            value += c.weight * c.penalty(x, &pg);
            *grad += c.weight * pg;
        } else {
            value += c.weight * c.penalty(x, nullptr);
        }
    }
    return value;
}

Eigen::VectorXd NlpProblem::clip(const Eigen::VectorXd& x) const {
    return x.cwiseMax(lower).cwiseMin(upper);
}

SolveReport minimize(const NlpProblem& problem, const Eigen::VectorXd& x0,
                     const SolverOptions& options) {
    if (problem.dim <= 0 || x0.size() != problem.dim) {
        throw ConfigError("nlp::minimize: dimension mismatch");
    }
    if ((problem.lower.array() > problem.upper.array()).any()) {
        throw ConfigError("nlp::minimize: lower bound exceeds upper bound");
    }
    for (const auto& c : problem.soft) {
        if (!(c.weight > 0.0)) {
            throw ConfigError("nlp::minimize: penalty weights must be positive");
        }
    }

    const int n = problem.dim;
    Eigen::VectorXd x = problem.clip(x0);
    Eigen::VectorXd g(n);
    double f = problem.merit(x, &g);
    if (!std::isfinite(f) || !g.allFinite()) {
        throw NumericsError("nlp::minimize: non-finite merit or gradient at start point");
    }

    Eigen::MatrixXd h_inv = Eigen::MatrixXd::Identity(n, n);
    SolveStatus status = SolveStatus::MaxIterations;
    int iter = 0;

    for (; iter < options.max_iters; ++iter) {
        if (projected_gradient_norm(problem, x, g) <= options.grad_tol) {
            status = SolveStatus::Converged;
            break;
        }

        // Variables pinned at a bound with the gradient pushing outward are
        // frozen this iteration; the quasi-Newton step acts on the rest.
        std::vector<int> free;
        free.reserve(n);
        for (int i = 0; i < n; ++i) {
            const bool at_lower = x(i) <= problem.lower(i) && g(i) > 0.0;
            const bool at_upper = x(i) >= problem.upper(i) && g(i) < 0.0;
            if (!at_lower && !at_upper) {
                free.push_back(i);
            }
        }

        Eigen::VectorXd d = Eigen::VectorXd::Zero(n);
        if (!free.empty()) {
            Eigen::VectorXd gf(free.size());
            for (size_t k = 0; k < free.size(); ++k) {
                gf(k) = g(free[k]);
            }
            Eigen::MatrixXd hf(free.size(), free.size());
            for (size_t r = 0; r < free.size(); ++r) {
                for (size_t c = 0; c < free.size(); ++c) {
                    hf(r, c) = h_inv(free[r], free[c]);
                }
            }
            const Eigen::VectorXd df = -hf * gf;
            for (size_t k = 0; k < free.size(); ++k) {
                d(free[k]) = df(k);
            }
        }
        if (d.dot(g) >= 0.0) {
            // Curvature model lost descent; restart from steepest descent.
            h_inv.setIdentity();
            d = -g;
            for (int i = 0; i < n; ++i) {
                const bool at_lower = x(i) <= problem.lower(i) && g(i) > 0.0;
                const bool at_upper = x(i) >= problem.upper(i) && g(i) < 0.0;
                if (at_lower || at_upper) {
                    d(i) = 0.0;
                }
            }
        }

        // Backtracking Armijo search along the projected path.
        double alpha = 1.0;
        bool accepted = false;
        Eigen::VectorXd x_new;
        double f_new = f;
        for (int ls = 0; ls < kMaxBacktracks; ++ls) {
            x_new = problem.clip(x + alpha * d);
            const Eigen::VectorXd step = x_new - x;
            if (step.lpNorm<Eigen::Infinity>() == 0.0) {
                break;
            }
            f_new = problem.merit(x_new, nullptr);
            if (std::isfinite(f_new) && f_new <= f + kArmijoSlope * g.dot(step)) {
                accepted = true;
                break;
            }
            alpha *= kBacktrackFactor;
        }
        if (!accepted) {
            status = SolveStatus::LineSearchStalled;
            break;
        }

        Eigen::VectorXd g_new(n);
        f_new = problem.merit(x_new, &g_new);
        const Eigen::VectorXd s = x_new - x;
        const Eigen::VectorXd y = g_new - g;

        // Damped BFGS update of the inverse Hessian approximation.
        const double sy = s.dot(y);
        if (std::isfinite(sy) && sy > 1e-12 * s.norm() * y.norm()) {
            const double rho = 1.0 / sy;
            const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);
            const Eigen::MatrixXd v = eye - rho * s * y.transpose();
            h_inv = v * h_inv * v.transpose() + rho * s * s.transpose();
        }

        x = x_new;
        f = f_new;
        g = g_new;

        if (s.lpNorm<Eigen::Infinity>() <= options.step_tol) {
            ++iter;
            status = SolveStatus::Converged;
            break;
        }
    }

    SolveReport report;
    report.x = x;
    report.merit = f;
    report.objective = problem.objective(x, nullptr);
    report.iterations = iter;
    report.first_order_residual = projected_gradient_norm(problem, x, g);
    report.max_soft_violation = 0.0;
    for (const auto& c : problem.soft) {
        report.max_soft_violation = std::max(report.max_soft_violation, c.max_violation(x));
    }
    report.status = status;
    return report;
}

double grad_check(const NlpProblem& problem, const Eigen::VectorXd& x, double h) {
    Eigen::VectorXd analytic(problem.dim);
    problem.merit(x, &analytic);

    Eigen::VectorXd fd(problem.dim);
    Eigen::VectorXd xp = x;
    for (int i = 0; i < problem.dim; ++i) {
        const double xi = x(i);
        xp(i) = xi + h;
        const double fp = problem.merit(xp, nullptr);
        xp(i) = xi - h;
        const double fm = problem.merit(xp, nullptr);
        xp(i) = xi;
        fd(i) = (fp - fm) / (2.0 * h);
    }
    const double scale = std::max(1.0, fd.lpNorm<Eigen::Infinity>());
    return (analytic - fd).lpNorm<Eigen::Infinity>() / scale;
}

ObjectiveFn with_fd_gradient(std::function<double(const Eigen::VectorXd&)> f, double h) {
    return [f = std::move(f), h](const Eigen::VectorXd& x, Eigen::VectorXd* grad) -> double {
        const double value = f(x);
        if (grad != nullptr) {
            grad->resize(x.size());
            Eigen::VectorXd xp = x;
            for (Eigen::Index i = 0; i < x.size(); ++i) {
                const double xi = x(i);
                xp(i) = xi + h;
                const double fp = f(xp);
                xp(i) = xi - h;
                const double fm = f(xp);
                xp(i) = xi;
                (*grad)(i) = (fp - fm) / (2.0 * h);
            }
        }
        return value;
    };
}

} // namespace lfmpc::nlp
