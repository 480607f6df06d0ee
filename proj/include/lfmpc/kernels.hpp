#pragma once

#include <Eigen/Dense>

namespace lfmpc {

/// Hyperparameters of a stationary Matern covariance function.
///
/// Only half-integer smoothness (nu in {1/2, 3/2, 5/2}) is supported: those
/// are the members of the family whose spectral density is rational, so the
/// process has an exact finite-dimensional state-space realization.
struct KernelSpec {
    double sigma2 = 1.0; ///< variance scale, kappa(0)
    double ell = 1.0;    ///< length scale (seconds)
    double nu = 2.5;     ///< smoothness, one of 0.5, 1.5, 2.5

    /// Throws ConfigError if any field is out of range.
    void validate() const;

    /// Latent state dimension p = nu + 1/2.
    int state_dim() const;

    /// Inverse-scale parameter sqrt(2 nu) / ell.
    double lambda() const;
};

/// Evaluates kappa(|tau|) using the closed half-integer forms.
double matern_eval(const KernelSpec& spec, double tau);

/// N x N covariance matrix of the process sampled at `times`.
Eigen::MatrixXd gram_matrix(const KernelSpec& spec, const Eigen::VectorXd& times);

struct GpPosterior {
    Eigen::VectorXd mean;
    Eigen::VectorXd variance;
};

/// Exact GP regression: conditions the zero-mean prior on observations
/// (train_times, train_values) with i.i.d. noise variance `noise_var` and
/// returns the posterior marginals at `test_times`.
///
/// Kept as a validation oracle for the state-space conversion; the control
/// path never calls it.
GpPosterior gp_posterior(const KernelSpec& spec, const Eigen::VectorXd& train_times,
                         const Eigen::VectorXd& train_values, double noise_var,
                         const Eigen::VectorXd& test_times);

} // namespace lfmpc
