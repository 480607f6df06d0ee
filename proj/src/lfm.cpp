#include "lfmpc/lfm.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "lfmpc/errors.hpp"

namespace lfmpc {

double wrap_angle(double psi) {
    double w = std::fmod(psi + M_PI, 2.0 * M_PI);
    if (w <= 0.0) {
        w += 2.0 * M_PI;
    }
    return w - M_PI;
}

Eigen::Vector4d bicycle_drift(const BicycleState& state, double a, double delta, double w,
                              double length) {
    if (!(std::abs(delta) < M_PI / 2.0)) {
        throw ConfigError("bicycle_drift: |delta| must be < pi/2, got " + std::to_string(delta));
    }
    const double alpha = std::atan(0.5 * std::tan(delta));
    const double heading = state.psi + alpha;
    return {state.v * std::cos(heading), state.v * std::sin(heading), a + w,
            state.v / (length / 2.0) * std::sin(alpha)};
}

BicycleDynamics::BicycleDynamics(double length) : length_(length) {
    if (!(length > 0.0)) {
        throw ConfigError("BicycleDynamics: length must be positive");
    }
}

void BicycleDynamics::drift(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                            const Eigen::VectorXd& w, Eigen::VectorXd& dx) const {
    dx = bicycle_drift(BicycleState::from_vector(x), u(0), u(1), w(0), length_);
}

void BicycleDynamics::drift_jacobians(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                                      const Eigen::VectorXd& /*w*/, Eigen::MatrixXd& Jx,
                                      Eigen::MatrixXd& Ju, Eigen::MatrixXd& Jw) const {
    const double v = x(2);
    const double psi = x(3);
    const double delta = u(1);
    const double t = std::tan(delta);
    const double alpha = std::atan(0.5 * t);
    // d(alpha)/d(delta) = 0.5 sec^2(delta) / (1 + 0.25 tan^2(delta))
    const double sec2 = 1.0 + t * t;
    const double dalpha = 0.5 * sec2 / (1.0 + 0.25 * t * t);
    const double ch = std::cos(psi + alpha);
    const double sh = std::sin(psi + alpha);
    const double half_l = length_ / 2.0;

    Jx.setZero(4, 4);
    Jx(0, 2) = ch;
    Jx(0, 3) = -v * sh;
    Jx(1, 2) = sh;
    Jx(1, 3) = v * ch;
    Jx(3, 2) = std::sin(alpha) / half_l;

    Ju.setZero(4, 2);
    Ju(0, 1) = -v * sh * dalpha;
    Ju(1, 1) = v * ch * dalpha;
    Ju(2, 0) = 1.0;
    Ju(3, 1) = v / half_l * std::cos(alpha) * dalpha;

    Jw.setZero(4, 1);
    Jw(2, 0) = 1.0;
}

void AugmentedModel::drift(const Eigen::VectorXd& xbar, const Eigen::VectorXd& u,
                           Eigen::VectorXd& dxbar) const {
    const int p = latent.p;
    Eigen::VectorXd w(1);
    w(0) = latent.C * xbar.tail(p);
    Eigen::VectorXd dx(n_x);
    nominal->drift(xbar.head(n_x), u, w, dx);
    dxbar.resize(n_a);
    dxbar.head(n_x) = dx;
    dxbar.tail(p) = latent.A * xbar.tail(p);
}

void AugmentedModel::drift_jacobians(const Eigen::VectorXd& xbar, const Eigen::VectorXd& u,
                                     Eigen::MatrixXd& Jx, Eigen::MatrixXd& Ju) const {
    const int p = latent.p;
    Eigen::VectorXd w(1);
    w(0) = latent.C * xbar.tail(p);
    Eigen::MatrixXd jxx(n_x, n_x), jxu(n_x, n_u), jxw(n_x, 1);
    nominal->drift_jacobians(xbar.head(n_x), u, w, jxx, jxu, jxw);

    Jx.setZero(n_a, n_a);
    Jx.topLeftCorner(n_x, n_x) = jxx;
    Jx.topRightCorner(n_x, p) = jxw * latent.C;
    Jx.bottomRightCorner(p, p) = latent.A;

    Ju.setZero(n_a, n_u);
    Ju.topRows(n_x) = jxu;
}

Eigen::VectorXd AugmentedModel::bbar() const {
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n_a);
    b.tail(latent.p) = latent.B;
    return b;
}

AugmentedModel augment(std::shared_ptr<const NominalDynamics> nominal, const LatentSde& latent,
                       int disturbance_state) {
    if (!nominal) {
        throw ConfigError("augment: nominal dynamics must not be null");
    }
    if (nominal->disturbance_dim() != 1) {
        throw ConfigError("augment: latent output is scalar but nominal expects n_w = " +
                          std::to_string(nominal->disturbance_dim()));
    }
    if (disturbance_state < 0 || disturbance_state >= nominal->state_dim()) {
        throw ConfigError("augment: disturbance_state index out of range");
    }
    AugmentedModel m;
    m.nominal = std::move(nominal);
    m.latent = latent;
    m.disturbance_state = disturbance_state;
    m.n_x = m.nominal->state_dim();
    m.n_u = m.nominal->input_dim();
    m.n_a = m.n_x + latent.p;
    return m;
}

Eigen::VectorXd em_step(const AugmentedModel& model, const Eigen::VectorXd& xbar,
                        const Eigen::VectorXd& u, double dbeta, double dt) {
    Eigen::VectorXd dxbar;
    model.drift(xbar, u, dxbar);
    Eigen::VectorXd next = xbar + dxbar * dt;
    next.tail(model.latent.p) += model.latent.B * dbeta;
    if (!next.allFinite()) {
        auto names = model.nominal->state_names();
        for (int i = 0; i < model.n_a; ++i) {
            if (!std::isfinite(next(i))) {
                const std::string label =
                    i < model.n_x ? names[i] : "z" + std::to_string(i - model.n_x);
                throw NumericsError("em_step: state '" + label + "' became non-finite");
            }
        }
    }
    return next;
}

MeasurementModel::MeasurementModel(Observation h, Eigen::MatrixXd R)
    : h_(std::move(h)), R_(std::move(R)) {
    if (R_.rows() != R_.cols()) {
        throw ConfigError("MeasurementModel: R must be square");
    }
    if (!R_.isApprox(R_.transpose(), 1e-12)) {
        throw ConfigError("MeasurementModel: R must be symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(R_);
    if (es.eigenvalues().minCoeff() < -1e-12 * std::max(1.0, es.eigenvalues().maxCoeff())) {
        throw ConfigError("MeasurementModel: R must be positive semidefinite");
    }
    noise_transform_ =
        es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();

    llt_.compute(R_);
    positive_definite_ = llt_.info() == Eigen::Success && es.eigenvalues().minCoeff() > 0.0;
    if (positive_definite_) {
        const Eigen::MatrixXd l = llt_.matrixL();
        double log_det = 0.0;
        for (Eigen::Index i = 0; i < R_.rows(); ++i) {
            log_det += 2.0 * std::log(l(i, i));
        }
        log_norm_const_ = -0.5 * (R_.rows() * std::log(2.0 * M_PI) + log_det);
    }
}

Eigen::VectorXd MeasurementModel::sample(const Eigen::VectorXd& xbar, Rng& rng) const {
    Eigen::VectorXd xi(R_.rows());
    for (Eigen::Index i = 0; i < xi.size(); ++i) {
        xi(i) = rng.normal();
    }
    return h_(xbar) + noise_transform_ * xi;
}

double MeasurementModel::log_likelihood(const Eigen::VectorXd& y,
                                        const Eigen::VectorXd& xbar) const {
    if (!positive_definite_) {
        throw NumericsError("MeasurementModel: likelihood requires positive definite R");
    }
    const Eigen::VectorXd innov = y - h_(xbar);
    return log_norm_const_ - 0.5 * innov.dot(llt_.solve(innov));
}

MeasurementModel physical_state_measurement(const AugmentedModel& model,
                                            const Eigen::MatrixXd& R) {
    const int n_x = model.n_x;
    if (R.rows() != n_x) {
        throw ConfigError("physical_state_measurement: R must be n_x x n_x");
    }
    return MeasurementModel(
        [n_x](const Eigen::VectorXd& xbar) -> Eigen::VectorXd { return xbar.head(n_x); }, R);
}

} // namespace lfmpc
