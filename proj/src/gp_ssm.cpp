#include "lfmpc/gp_ssm.hpp"

#include <cmath>
#include <string>
#include <unsupported/Eigen/MatrixFunctions>

#include "lfmpc/errors.hpp"

namespace lfmpc {

namespace {

// sigma2 * 2 sqrt(pi) Gamma(nu + 1/2) / Gamma(nu) * lambda^(2 nu); the
// numerator constant of S(omega) and the spectral density of dbeta.
double noise_spectral_density(const KernelSpec& spec) {
    const double lam = spec.lambda();
    return spec.sigma2 * 2.0 * std::sqrt(M_PI) * std::tgamma(spec.nu + 0.5) /
           std::tgamma(spec.nu) * std::pow(lam, 2.0 * spec.nu);
}

double binomial(int n, int k) {
    double r = 1.0;
    for (int i = 1; i <= k; ++i) {
        r *= static_cast<double>(n - k + i) / static_cast<double>(i);
    }
    return r;
}

} // namespace

double spectral_density(const KernelSpec& spec, double omega) {
    spec.validate();
    const double lam = spec.lambda();
    return noise_spectral_density(spec) *
           std::pow(lam * lam + omega * omega, -(spec.nu + 0.5));
}

Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Q) {
    const auto p = A.rows();
    // vec(A P + P A^T) = (I (x) A + A (x) I) vec(P)
    Eigen::MatrixXd k = Eigen::MatrixXd::Zero(p * p, p * p);
    for (Eigen::Index i = 0; i < p; ++i) {
        k.block(i * p, i * p, p, p) += A;
        for (Eigen::Index j = 0; j < p; ++j) {
            for (Eigen::Index l = 0; l < p; ++l) {
                k(j * p + i, l * p + i) += A(j, l);
            }
        }
    }
    Eigen::VectorXd rhs(p * p);
    for (Eigen::Index j = 0; j < p; ++j) {
        rhs.segment(j * p, p) = -Q.col(j);
    }
    Eigen::VectorXd vp = k.fullPivLu().solve(rhs);
    Eigen::MatrixXd pmat(p, p);
    for (Eigen::Index j = 0; j < p; ++j) {
        pmat.col(j) = vp.segment(j * p, p);
    }
    return 0.5 * (pmat + pmat.transpose());
}

LatentSde matern_to_sde(const KernelSpec& spec) {
    spec.validate();
    const int p = spec.state_dim();
    const double lam = spec.lambda();

    LatentSde sde;
    sde.p = p;
    sde.A = Eigen::MatrixXd::Zero(p, p);
    for (int i = 0; i + 1 < p; ++i) {
        sde.A(i, i + 1) = 1.0;
    }
    // Denominator (s + lambda)^p: coefficient of s^i is C(p, i) lambda^(p - i).
    for (int i = 0; i < p; ++i) {
        sde.A(p - 1, i) = -binomial(p, i) * std::pow(lam, p - i);
    }
    sde.B = Eigen::VectorXd::Zero(p);
    sde.B(p - 1) = 1.0;
    sde.C = Eigen::RowVectorXd::Zero(p);
    sde.C(0) = 1.0;
    sde.q = noise_spectral_density(spec);
    sde.Pinf = solve_lyapunov(sde.A, sde.q * sde.B * sde.B.transpose());
    return sde;
}

DiscreteLatent discretize_exact(const LatentSde& sde, double dt) {
    if (!(dt > 0.0)) {
        throw ConfigError("discretize_exact: dt must be positive, got " + std::to_string(dt));
    }
    const int p = sde.p;
    // Van Loan: expm([[-A, BqB^T], [0, A^T]] dt) = [[*, G], [0, F]] with
    // F = exp(A^T dt) and F^T G the discrete noise covariance.
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(2 * p, 2 * p);
    m.topLeftCorner(p, p) = -sde.A;
    m.topRightCorner(p, p) = sde.q * sde.B * sde.B.transpose();
    m.bottomRightCorner(p, p) = sde.A.transpose();
    const Eigen::MatrixXd em = (m * dt).exp();

    DiscreteLatent d;
    d.dt = dt;
    d.Ad = em.bottomRightCorner(p, p).transpose();
    Eigen::MatrixXd qd = d.Ad * em.topRightCorner(p, p);
    d.Qd = 0.5 * (qd + qd.transpose());
    return d;
}

double autocovariance(const LatentSde& sde, double tau) {
    if (tau < 0.0) {
        throw ConfigError("autocovariance: tau must be nonnegative");
    }
    const Eigen::MatrixXd e = (sde.A * tau).exp();
    return sde.C * e * sde.Pinf * sde.C.transpose();
}

} // namespace lfmpc
