#include "lfmpc/estimator.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "lfmpc/errors.hpp"

namespace lfmpc {

namespace {

// Stream tag for the resampling offset, disjoint from particle indices.
constexpr std::uint64_t kResampleTag = ~0ull;

// Reweight by measurement likelihood (log-domain, max-subtracted), normalize,
// compute the weighted estimate, then resample per policy.
PfStepResult weight_and_resample(ParticleCloud& cloud, const MeasurementModel& measurement,
                                 const Eigen::VectorXd& y, const FilterOptions& options,
                                 std::uint64_t seed) {
    const int np = cloud.size();
    Eigen::VectorXd logw(np);
    for (int i = 0; i < np; ++i) {
        logw(i) = std::log(cloud.weights(i)) + measurement.log_likelihood(y, cloud.states.col(i));
    }
    const double max_logw = logw.maxCoeff();
    if (!std::isfinite(max_logw)) {
        double min_innovation = std::numeric_limits<double>::infinity();
        for (int i = 0; i < np; ++i) {
            min_innovation = std::min(
                min_innovation, (y - measurement.observe(cloud.states.col(i))).norm());
        }
        throw NumericsError("pf_step: all likelihoods vanished (degeneracy); smallest "
                            "innovation magnitude " +
                            std::to_string(min_innovation));
    }
    cloud.weights = (logw.array() - max_logw).exp();
    cloud.weights /= cloud.weights.sum();

    PfStepResult result;
    result.estimate = cloud_estimate(cloud);
    result.ess = cloud.ess();

    const bool resample = options.policy == FilterOptions::Resample::Always ||
                          result.ess < options.ess_threshold * np;
    if (resample) {
        Rng rng(mix_seed({seed, kResampleTag}));
        systematic_resample(cloud, rng.uniform());
        result.resampled = true;
    }
    return result;
}

} // namespace

ParticleCloud pf_init(const AugmentedModel& model, const Eigen::VectorXd& x0_phys,
                      const FilterOptions& options, std::uint64_t seed,
                      const MeasurementModel* jitter_noise) {
    if (options.n_particles < 1) {
        throw ConfigError("pf_init: n_particles must be >= 1");
    }
    if (x0_phys.size() != model.n_x) {
        throw ConfigError("pf_init: x0_phys has wrong dimension");
    }
    const int np = options.n_particles;
    const int p = model.latent.p;

    const Eigen::MatrixXd pinf_chol = Eigen::LLT<Eigen::MatrixXd>(model.latent.Pinf).matrixL();

    ParticleCloud cloud;
    cloud.states.resize(model.n_a, np);
    cloud.weights = Eigen::VectorXd::Constant(np, 1.0 / np);
    for (int i = 0; i < np; ++i) {
        Rng rng(mix_seed({seed, static_cast<std::uint64_t>(i)}));
        Eigen::VectorXd z(p);
        for (int j = 0; j < p; ++j) {
            z(j) = rng.normal();
        }
        cloud.states.col(i).head(model.n_x) = x0_phys;
        cloud.states.col(i).tail(p) = pinf_chol * z;
        if (options.jitter_init && jitter_noise != nullptr) {
            cloud.states.col(i).head(model.n_x) = jitter_noise->sample(cloud.states.col(i), rng);
        }
    }
    return cloud;
}

PfStepResult pf_step(ParticleCloud& cloud, const AugmentedModel& model,
                     const MeasurementModel& measurement, const Eigen::VectorXd& u_applied,
                     const Eigen::VectorXd& y, double dt, const FilterOptions& options,
                     std::uint64_t seed) {
    const int np = cloud.size();
    const double dbeta_std = std::sqrt(model.latent.q * dt);
    for (int i = 0; i < np; ++i) {
        Rng rng(mix_seed({seed, static_cast<std::uint64_t>(i)}));
        const double dbeta = dbeta_std * rng.normal();
        cloud.states.col(i) = em_step(model, cloud.states.col(i), u_applied, dbeta, dt);
    }
    return weight_and_resample(cloud, measurement, y, options, seed);
}

PfStepResult pf_update(ParticleCloud& cloud, const MeasurementModel& measurement,
                       const Eigen::VectorXd& y, const FilterOptions& options,
                       std::uint64_t seed) {
    return weight_and_resample(cloud, measurement, y, options, seed);
}

Estimate cloud_estimate(const ParticleCloud& cloud) {
    Estimate est;
    est.mean = cloud.states * cloud.weights;
    const Eigen::MatrixXd centered = cloud.states.colwise() - est.mean;
    est.cov = centered * cloud.weights.asDiagonal() * centered.transpose();
    est.cov = 0.5 * (est.cov + est.cov.transpose());
    return est;
}

void systematic_resample(ParticleCloud& cloud, double offset) {
    const int np = cloud.size();
    Eigen::MatrixXd resampled(cloud.states.rows(), np);
    double cumulative = cloud.weights(0);
    int j = 0;
    for (int i = 0; i < np; ++i) {
        const double position = (static_cast<double>(i) + offset) / np;
        while (cumulative < position && j + 1 < np) {
            ++j;
            cumulative += cloud.weights(j);
        }
        resampled.col(i) = cloud.states.col(j);
    }
    cloud.states = std::move(resampled);
    cloud.weights.setConstant(1.0 / np);
}

} // namespace lfmpc
