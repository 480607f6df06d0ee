#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "lfmpc/gp_ssm.hpp"
#include "lfmpc/rng.hpp"

namespace lfmpc {

/// Deterministic drift x' = f(x, u, w) of the physical subsystem plus its
/// Jacobians. Implementations must be pure: a single instance may be read
/// concurrently by many rollout workers.
class NominalDynamics {
public:
    virtual ~NominalDynamics() = default;

    virtual int state_dim() const = 0;
    virtual int input_dim() const = 0;
    virtual int disturbance_dim() const = 0;

    virtual void drift(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                       const Eigen::VectorXd& w, Eigen::VectorXd& dx) const = 0;

    /// Jacobians of the drift at (x, u, w). Jx is n_x x n_x, Ju is n_x x n_u,
    /// Jw is n_x x n_w; all are overwritten.
    virtual void drift_jacobians(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                                 const Eigen::VectorXd& w, Eigen::MatrixXd& Jx,
                                 Eigen::MatrixXd& Ju, Eigen::MatrixXd& Jw) const = 0;

    virtual std::vector<std::string> state_names() const = 0;
};

/// Planar kinematic state of the vehicle.
struct BicycleState {
    double px = 0.0;  ///< position x (m)
    double py = 0.0;  ///< position y (m)
    double v = 0.0;   ///< speed (m/s)
    double psi = 0.0; ///< heading (rad), unwrapped

    Eigen::Vector4d to_vector() const { return {px, py, v, psi}; }
    static BicycleState from_vector(const Eigen::Vector4d& x) {
        return {x(0), x(1), x(2), x(3)};
    }
};

/// Wraps an angle to (-pi, pi] for reporting.
double wrap_angle(double psi);

/// Kinematic bicycle drift with slip angle alpha = arctan(0.5 tan(delta)) and
/// an additive disturbance w on the velocity equation:
///   [v cos(psi+alpha), v sin(psi+alpha), a + w, v / (l/2) * sin(alpha)].
/// Requires |delta| < pi/2.
Eigen::Vector4d bicycle_drift(const BicycleState& state, double a, double delta, double w,
                              double length = 0.5);

class BicycleDynamics final : public NominalDynamics {
public:
    explicit BicycleDynamics(double length = 0.5);

    int state_dim() const override { return 4; }
    int input_dim() const override { return 2; }
    int disturbance_dim() const override { return 1; }

    void drift(const Eigen::VectorXd& x, const Eigen::VectorXd& u, const Eigen::VectorXd& w,
               Eigen::VectorXd& dx) const override;
    void drift_jacobians(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                         const Eigen::VectorXd& w, Eigen::MatrixXd& Jx, Eigen::MatrixXd& Ju,
                         Eigen::MatrixXd& Jw) const override;
    std::vector<std::string> state_names() const override { return {"px", "py", "v", "psi"}; }

    double length() const { return length_; }

private:
    double length_;
};

/// Nominal dynamics composed with the latent SDE. The augmented state is
/// xbar = [x; z] and the drift is fbar = [f(x, u, C z); A z] with noise input
/// Bbar = [0; B]; the latent block is linear and uncontrollable.
struct AugmentedModel {
    std::shared_ptr<const NominalDynamics> nominal;
    LatentSde latent;
    int disturbance_state = 2; ///< physical equation that receives w

    int n_x = 0;
    int n_u = 0;
    int n_a = 0; ///< n_x + p

    void drift(const Eigen::VectorXd& xbar, const Eigen::VectorXd& u,
               Eigen::VectorXd& dxbar) const;

    /// Jacobians of fbar: Jx is n_a x n_a, Ju is n_a x n_u.
    void drift_jacobians(const Eigen::VectorXd& xbar, const Eigen::VectorXd& u,
                         Eigen::MatrixXd& Jx, Eigen::MatrixXd& Ju) const;

    /// Noise input vector [0_{n_x}; B].
    Eigen::VectorXd bbar() const;

    double disturbance_of(const Eigen::VectorXd& xbar) const {
        return latent.C * xbar.tail(latent.p);
    }
};

/// Composes the nominal dynamics with a latent SDE. `disturbance_state` names
/// the physical equation the disturbance enters (2 = velocity for the
/// bicycle); the latent output must be scalar and match n_w.
AugmentedModel augment(std::shared_ptr<const NominalDynamics> nominal, const LatentSde& latent,
                       int disturbance_state = 2);

/// One Euler-Maruyama step xbar + fbar(xbar, u) dt + Bbar dbeta. Throws
/// NumericsError naming the offending state if the result is non-finite.
Eigen::VectorXd em_step(const AugmentedModel& model, const Eigen::VectorXd& xbar,
                        const Eigen::VectorXd& u, double dbeta, double dt);

/// Observation function plus additive Gaussian noise with covariance R.
class MeasurementModel {
public:
    using Observation = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

    MeasurementModel(Observation h, Eigen::MatrixXd R);

    /// h(xbar) + L xi with L L^T = R, xi standard normal.
    Eigen::VectorXd sample(const Eigen::VectorXd& xbar, Rng& rng) const;

    /// log N(y; h(xbar), R); requires R positive definite.
    double log_likelihood(const Eigen::VectorXd& y, const Eigen::VectorXd& xbar) const;

    Eigen::VectorXd observe(const Eigen::VectorXd& xbar) const { return h_(xbar); }
    const Eigen::MatrixXd& noise_covariance() const { return R_; }
    int dim() const { return static_cast<int>(R_.rows()); }

private:
    Observation h_;
    Eigen::MatrixXd R_;
    Eigen::MatrixXd noise_transform_; // L with L L^T = R (eigendecomposition, PSD ok)
    Eigen::LLT<Eigen::MatrixXd> llt_; // valid only if R is PD
    bool positive_definite_ = false;
    double log_norm_const_ = 0.0;
};

/// Case-study measurement: full-state feedback for the physical states only;
/// the latent states never appear in y.
MeasurementModel physical_state_measurement(const AugmentedModel& model,
                                            const Eigen::MatrixXd& R);

} // namespace lfmpc
