#include "lfmpc/runner.hpp"

#include <chrono>
#include <cmath>
#include <memory>

#include "lfmpc/errors.hpp"
#include "lfmpc/rng.hpp"
#include "lfmpc/track.hpp"

namespace lfmpc {

namespace {

// Matrix square root via eigendecomposition; tolerates the semidefinite case.
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    return es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

// Truth-side simulator: exact latent chain, forward-Euler physical states at
// dt / substeps, disturbance evaluated at each substep start.
class TruthSimulator {
public:
    TruthSimulator(const ExperimentConfig& config, std::uint64_t seed)
        : nominal_(config.model.length),
          latent_(matern_to_sde(config.effective_truth_kernel())),
          substeps_(config.model.substeps), dt_(config.mpc.dt), seed_(seed) {
        const DiscreteLatent d = discretize_exact(latent_, dt_ / substeps_);
        ad_ = d.Ad;
        noise_sqrt_ = psd_sqrt(d.Qd);
        phys_ = config.run.start;

        Rng rng = make_stream(seed_, RngDomain::TruthInit);
        Eigen::VectorXd xi(latent_.p);
        for (int i = 0; i < latent_.p; ++i) {
            xi(i) = rng.normal();
        }
        z_ = psd_sqrt(latent_.Pinf) * xi;
    }

    void advance(const Eigen::Vector2d& u, int step) {
        const double h = dt_ / substeps_;
        for (int s = 0; s < substeps_; ++s) {
            const double w = latent_.C * z_;
            const Eigen::Vector4d dx =
                bicycle_drift(BicycleState::from_vector(phys_), u(0), u(1), w, nominal_.length());
            phys_ += dx * h;

            Rng rng = make_stream(seed_, RngDomain::TruthLatent,
                                  static_cast<std::uint64_t>(step) * substeps_ + s);
            Eigen::VectorXd xi(latent_.p);
            for (int i = 0; i < latent_.p; ++i) {
                xi(i) = rng.normal();
            }
            z_ = ad_ * z_ + noise_sqrt_ * xi;
        }
        if (!phys_.allFinite() || !z_.allFinite()) {
            throw NumericsError("truth simulation: state became non-finite");
        }
    }

    const Eigen::Vector4d& physical() const { return phys_; }
    const Eigen::VectorXd& latent_state() const { return z_; }
    double disturbance() const { return latent_.C * z_; }
    const BicycleDynamics& nominal() const { return nominal_; }

private:
    BicycleDynamics nominal_;
    LatentSde latent_;
    int substeps_;
    double dt_;
    std::uint64_t seed_;
    Eigen::MatrixXd ad_;
    Eigen::MatrixXd noise_sqrt_;
    Eigen::Vector4d phys_;
    Eigen::VectorXd z_;
};

} // namespace

RunLog run_experiment(const ExperimentConfig& config, std::uint64_t seed) {
    config.validate();
    const auto t_start = std::chrono::steady_clock::now();

    RunLog log;
    log.config = config;
    log.config.run.seed = seed;

    const double dt = config.mpc.dt;
    const MpcConfig mpc_cfg = config.mpc_config();
    const FilterOptions filter_opts = config.filter_options();

    auto nominal = std::make_shared<BicycleDynamics>(config.model.length);
    const LatentSde latent = matern_to_sde(config.kernel);
    const AugmentedModel model = augment(nominal, latent, config.model.disturbance_state);
    const MeasurementModel measurement =
        physical_state_measurement(model, config.model.r_diag.asDiagonal());

    TruthSimulator truth(config, seed);
    MpcController controller(model, mpc_cfg, seed);
    ParticleCloud cloud = pf_init(model, config.run.start, filter_opts,
                                  mix_seed({seed, static_cast<std::uint64_t>(
                                                      RngDomain::FilterInit)}),
                                  &measurement);

    const Eigen::Vector2d goal_xy = config.mpc.goal.head<2>();
    Eigen::Vector2d u_prev = Eigen::Vector2d::Zero();
    bool have_input = false;

    auto& summary = log.summary;
    try {
        for (int k = 0; k < config.run.max_steps; ++k) {
            summary.final_goal_distance =
                (truth.physical().head<2>() - goal_xy).norm();
            if (summary.final_goal_distance <= config.mpc.goal_radius) {
                summary.reached_goal = true;
                break;
            }

            Rng meas_rng =
                make_stream(seed, RngDomain::Measurement, static_cast<std::uint64_t>(k));
            Eigen::VectorXd truth_state(model.n_a);
            truth_state.head<4>() = truth.physical();
            // Measurement depends only on the physical states; pad with the
            // controller-side latent dimension for the observation call.
            truth_state.tail(model.latent.p).setZero();
            const Eigen::VectorXd y = measurement.sample(truth_state, meas_rng);

            const std::uint64_t pf_seed =
                mix_seed({seed, static_cast<std::uint64_t>(RngDomain::FilterStep),
                          static_cast<std::uint64_t>(k)});
            const PfStepResult pf_result =
                have_input ? pf_step(cloud, model, u_prev, y, dt, filter_opts, pf_seed)
                           : pf_update(cloud, measurement, y, filter_opts, pf_seed);
            const Estimate& est = pf_result.estimate;

            const MpcController::StepResult mpc_result = controller.step(est.mean);

            Eigen::Vector2d u = mpc_result.input;
            bool used_fallback = false;
            if (mpc_result.plan.stats.degraded && have_input) {
                u = u_prev;
                used_fallback = true;
            }

            StepRecord row;
            row.step = k;
            row.t = k * dt;
            row.true_phys = truth.physical();
            row.true_phys(3) = wrap_angle(row.true_phys(3));
            row.true_latent = truth.latent_state();
            row.true_w = truth.disturbance();
            row.measurement = y.head<4>();
            row.measurement(3) = wrap_angle(row.measurement(3));
            row.est_mean = est.mean;
            row.est_bound2 = 2.0 * est.cov.diagonal().cwiseMax(0.0).cwiseSqrt();
            row.est_w = model.latent.C * est.mean.tail(model.latent.p);
            const double w_var = model.latent.C *
                                 est.cov.bottomRightCorner(model.latent.p, model.latent.p) *
                                 model.latent.C.transpose();
            row.est_w_bound2 = 2.0 * std::sqrt(std::max(w_var, 0.0));
            row.ess = pf_result.ess;
            row.input = u;
            row.cost = mpc_result.plan.cost;
            row.iterations = mpc_result.plan.stats.iterations;
            row.residual = mpc_result.plan.stats.first_order_residual;
            row.scenario_violation = mpc_result.plan.stats.max_violation;
            row.penalty_rounds = mpc_result.plan.stats.penalty_rounds;
            row.degraded = mpc_result.plan.stats.degraded;
            row.used_fallback = used_fallback;
            row.solve_seconds = mpc_result.plan.stats.solve_seconds;

            const CorridorBounds corridor = make_track(config.track, row.true_phys(0));
            row.corridor_lower = corridor.lower;
            row.corridor_upper = corridor.upper;
            row.corridor_violation = std::max(
                {0.0, row.true_phys(1) - corridor.upper, corridor.lower - row.true_phys(1)});
            row.velocity_violation =
                std::max({0.0, row.true_phys(2) - config.mpc.v_max,
                          config.mpc.v_min - row.true_phys(2)});

            summary.degraded_solves += row.degraded ? 1 : 0;
            summary.max_corridor_violation =
                std::max(summary.max_corridor_violation, row.corridor_violation);
            summary.max_velocity_overshoot =
                std::max(summary.max_velocity_overshoot, row.velocity_violation);

            log.rows.push_back(std::move(row));

            truth.advance(u, k);
            u_prev = u;
            have_input = true;
            summary.steps = k + 1;
        }
        if (!summary.reached_goal) {
            summary.final_goal_distance = (truth.physical().head<2>() - goal_xy).norm();
            summary.reached_goal = summary.final_goal_distance <= config.mpc.goal_radius;
        }
    } catch (const std::exception& e) {
        summary.failed = true;
        summary.failure = e.what();
    }

    summary.duration = summary.steps * dt;
    summary.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return log;
}

} // namespace lfmpc
