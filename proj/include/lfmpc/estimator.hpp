#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "lfmpc/lfm.hpp"

namespace lfmpc {

/// Weighted sample approximation of the filtering posterior over the
/// augmented state. One column per particle; weights sum to one.
struct ParticleCloud {
    Eigen::MatrixXd states;  ///< n_a x N_p
    Eigen::VectorXd weights; ///< N_p, nonnegative, sums to 1

    int size() const { return static_cast<int>(weights.size()); }

    /// Effective sample size 1 / sum(w_i^2), in [1, N_p].
    double ess() const { return 1.0 / weights.squaredNorm(); }
};

struct Estimate {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
};

struct FilterOptions {
    int n_particles = 7000;
    /// Resample every step (pure bootstrap) or only when ESS drops below
    /// ess_threshold * N_p.
    enum class Resample { Always, EssThreshold } policy = Resample::Always;
    double ess_threshold = 0.5;
    /// Jitter the known initial physical state by measurement noise.
    bool jitter_init = false;
};

struct PfStepResult {
    Estimate estimate;  ///< weighted mean/cov before resampling
    double ess = 0.0;   ///< ESS after reweighting, before resampling
    bool resampled = false;
};

/// Initial cloud: physical components at x0_phys (optionally jittered by the
/// measurement noise), latent components drawn from N(0, Pinf), uniform
/// weights.
ParticleCloud pf_init(const AugmentedModel& model, const Eigen::VectorXd& x0_phys,
                      const FilterOptions& options, std::uint64_t seed,
                      const MeasurementModel* jitter_noise = nullptr);

/// One bootstrap step: propagate every particle through em_step with an
/// independent dbeta ~ N(0, q dt) (per-particle streams derived from `seed`),
/// reweight by the measurement likelihood, normalize, estimate, and
/// systematically resample per policy. The cloud is updated in place.
///
/// Throws NumericsError if all likelihoods underflow to zero (degeneracy,
/// reported with the smallest innovation magnitude) or if a particle blows
/// up during propagation.
PfStepResult pf_step(ParticleCloud& cloud, const AugmentedModel& model,
                     const MeasurementModel& measurement, const Eigen::VectorXd& u_applied,
                     const Eigen::VectorXd& y, double dt, const FilterOptions& options,
                     std::uint64_t seed);

/// Measurement-only update (no propagation); used at time zero before any
/// input has been applied.
PfStepResult pf_update(ParticleCloud& cloud, const MeasurementModel& measurement,
                       const Eigen::VectorXd& y, const FilterOptions& options,
                       std::uint64_t seed);

/// Weighted mean and covariance of the cloud.
Estimate cloud_estimate(const ParticleCloud& cloud);

/// Systematic resampling with a single uniform offset; leaves weights
/// uniform.
void systematic_resample(ParticleCloud& cloud, double offset);

} // namespace lfmpc
