#pragma once

#include <Eigen/Dense>

#include "lfmpc/kernels.hpp"

namespace lfmpc {

/// Companion-form linear SDE  dz = A z dt + B dbeta,  w = C z,  with dbeta a
/// white-noise process of spectral density q. The stationary covariance Pinf
/// solves A Pinf + Pinf A^T + B q B^T = 0.
struct LatentSde {
    Eigen::MatrixXd A;    ///< p x p drift, Hurwitz
    Eigen::VectorXd B;    ///< p x 1 input vector, [0 ... 0 1]^T
    Eigen::RowVectorXd C; ///< 1 x p output selector, [1 0 ... 0]
    double q = 0.0;       ///< driving white-noise spectral density
    Eigen::MatrixXd Pinf; ///< p x p stationary covariance
    int p = 0;            ///< latent dimension

    /// Stationary output variance C Pinf C^T; equals kappa(0) = sigma2.
    double output_variance() const { return C * Pinf * C.transpose(); }
};

/// Exact one-step statistics of the latent chain at step dt:
/// z_{k+1} = Ad z_k + w_k with w_k ~ N(0, Qd).
struct DiscreteLatent {
    Eigen::MatrixXd Ad;
    Eigen::MatrixXd Qd;
    double dt = 0.0;
};

/// Power spectral density of the Matern covariance,
/// S(w) = sigma2 * (2 sqrt(pi) Gamma(nu + 1/2) / Gamma(nu)) * lambda^(2 nu)
///        * (lambda^2 + w^2)^-(nu + 1/2).
double spectral_density(const KernelSpec& spec, double omega);

/// Converts a half-integer Matern kernel into its equivalent companion-form
/// SDE. The transfer-function denominator is (lambda + s)^p, so the companion
/// coefficients are binomial, and Pinf comes from the continuous Lyapunov
/// equation.
LatentSde matern_to_sde(const KernelSpec& spec);

/// Ad = exp(A dt); Qd by the Van Loan augmented-matrix construction.
DiscreteLatent discretize_exact(const LatentSde& sde, double dt);

/// Output autocovariance C exp(A tau) Pinf C^T for tau >= 0.
double autocovariance(const LatentSde& sde, double tau);

/// Solves A P + P A^T + Q = 0 for symmetric P (Kronecker vectorization;
/// fine for the small p used here).
Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Q);

} // namespace lfmpc
