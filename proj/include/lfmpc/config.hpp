#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "lfmpc/kernels.hpp"
#include "lfmpc/scenario_mpc.hpp"
#include "lfmpc/track.hpp"

namespace lfmpc {

struct ModelConfig {
    double length = 0.5;        ///< vehicle length l (m)
    int disturbance_state = 2;  ///< physical equation receiving w (2 = velocity)
    Eigen::Vector4d r_diag{0.05 * 0.05, 0.05 * 0.05, 0.05 * 0.05, 0.01 * 0.01};
    int substeps = 1;           ///< truth-simulation substeps per control period
};

struct MpcSettings {
    int horizon = 7;
    int n_scenarios = 150;
    double dt = 0.2;
    Eigen::Vector4d q_diag{2.0, 2.0, 1.0, 0.0};
    Eigen::Vector4d qf_diag{2.0, 2.0, 1.0, 0.0};
    Eigen::Vector2d r_diag{0.5, 10.0};
    Eigen::Vector4d goal{60.0, 0.0, 0.0, 0.0};
    double a_max = 5.0;           ///< m/s^2
    double delta_max_deg = 25.0;  ///< steering bound (degrees)
    double v_min = 0.0;
    double v_max = 8.0;
    double epsilon = 0.05;
    double goal_radius = 0.3;
    SolverSettings solver;
};

struct FilterSettings {
    int particles = 7000;
    std::string resample = "always"; ///< "always" or "ess"
    double ess_threshold = 0.5;
    bool jitter_init = false;
};

struct RunSettings {
    std::uint64_t seed = 1;
    int max_steps = 200;
    Eigen::Vector4d start{0.0, 0.0, 0.0, 0.0};
};

/// Everything a closed-loop experiment needs. Parsed strictly: unknown JSON
/// keys are rejected with their path.
struct ExperimentConfig {
    KernelSpec kernel{4.0, 4.0, 2.5};
    /// Kernel the truth simulator samples from; defaults to `kernel`
    /// (matched-model experiment). Set to study model mismatch.
    std::optional<KernelSpec> truth_kernel;
    ModelConfig model;
    MpcSettings mpc;
    TrackSpec track;
    FilterSettings filter;
    RunSettings run;

    void validate() const;

    const KernelSpec& effective_truth_kernel() const {
        return truth_kernel.has_value() ? *truth_kernel : kernel;
    }

    /// Assembles the MpcConfig (weights, bounds, corridor and velocity
    /// constraints) for the bicycle case study.
    MpcConfig mpc_config() const;

    FilterOptions filter_options() const;
};

ExperimentConfig default_config();

ExperimentConfig config_from_json(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);
std::string config_to_json(const ExperimentConfig& config); // pretty-printed

} // namespace lfmpc
