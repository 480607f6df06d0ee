#include "lfmpc/kernels.hpp"

#include <cmath>
#include <string>

#include "lfmpc/errors.hpp"

namespace lfmpc {

namespace {

bool is_supported_nu(double nu) { return nu == 0.5 || nu == 1.5 || nu == 2.5; }

// Jitter added to Gram diagonals before factorization, relative to sigma2.
constexpr double kGramJitter = 1e-10;

} // namespace

void KernelSpec::validate() const {
    if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) {
        throw ConfigError("KernelSpec: sigma2 must be positive, got " + std::to_string(sigma2));
    }
    if (!(ell > 0.0) || !std::isfinite(ell)) {
        throw ConfigError("KernelSpec: ell must be positive, got " + std::to_string(ell));
    }
    if (!is_supported_nu(nu)) {
        throw ConfigError("KernelSpec: nu must be one of 1/2, 3/2, 5/2, got " +
                          std::to_string(nu));
    }
}

int KernelSpec::state_dim() const { return static_cast<int>(nu + 0.5); }

double KernelSpec::lambda() const { return std::sqrt(2.0 * nu) / ell; }

double matern_eval(const KernelSpec& spec, double tau) {
    spec.validate();
    const double r = spec.lambda() * std::abs(tau); // sqrt(2 nu) |tau| / ell
    const double e = std::exp(-r);
    if (spec.nu == 0.5) {
        return spec.sigma2 * e;
    }
    if (spec.nu == 1.5) {
        return spec.sigma2 * (1.0 + r) * e;
    }
    return spec.sigma2 * (1.0 + r + r * r / 3.0) * e; // nu = 5/2
}

Eigen::MatrixXd gram_matrix(const KernelSpec& spec, const Eigen::VectorXd& times) {
    spec.validate();
    const auto n = times.size();
    Eigen::MatrixXd k(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        k(i, i) = spec.sigma2;
        for (Eigen::Index j = 0; j < i; ++j) {
            k(i, j) = k(j, i) = matern_eval(spec, times(i) - times(j));
        }
    }
    return k;
}

GpPosterior gp_posterior(const KernelSpec& spec, const Eigen::VectorXd& train_times,
                         const Eigen::VectorXd& train_values, double noise_var,
                         const Eigen::VectorXd& test_times) {
    spec.validate();
    if (train_times.size() != train_values.size()) {
        throw ConfigError("gp_posterior: train_times and train_values differ in length");
    }
    if (noise_var < 0.0) {
        throw ConfigError("gp_posterior: noise_var must be nonnegative");
    }

    const auto n = train_times.size();
    const auto m = test_times.size();
    GpPosterior out;
    if (n == 0) {
        // Prior recovery.
        out.mean = Eigen::VectorXd::Zero(m);
        out.variance = Eigen::VectorXd::Constant(m, spec.sigma2);
        return out;
    }

    Eigen::MatrixXd knn = gram_matrix(spec, train_times);
    knn.diagonal().array() += noise_var + kGramJitter * spec.sigma2;

    Eigen::LLT<Eigen::MatrixXd> llt(knn);
    if (llt.info() != Eigen::Success) {
        throw NumericsError("gp_posterior: Gram matrix not positive definite after jitter");
    }

    Eigen::MatrixXd kns(n, m); // K_{N*}
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < m; ++j) {
            kns(i, j) = matern_eval(spec, train_times(i) - test_times(j));
        }
    }

    const Eigen::VectorXd alpha = llt.solve(train_values);
    const Eigen::MatrixXd kinv_kns = llt.solve(kns);

    out.mean = kns.transpose() * alpha;
    out.variance.resize(m);
    for (Eigen::Index j = 0; j < m; ++j) {
        double v = spec.sigma2 - kns.col(j).dot(kinv_kns.col(j));
        out.variance(j) = std::max(v, 0.0);
    }
    return out;
}

} // namespace lfmpc
