#pragma once

#include <vector>

#include "lfmpc/scenario_mpc.hpp"

namespace lfmpc {

/// Sinusoidal road corridor: centerline y_c(x) = amplitude * sin(2 pi x /
/// period), bounds y_c +/- half_width, with simple bounds on x.
struct TrackSpec {
    double amplitude = 4.0;  ///< m
    double period = 30.0;    ///< m
    double half_width = 2.0; ///< m
    double x_min = 0.0;
    double x_max = 60.0;
};

struct CorridorBounds {
    double lower = 0.0;
    double upper = 0.0;
};

double track_center(const TrackSpec& track, double x);
double track_center_slope(const TrackSpec& track, double x);

/// Corridor bounds at x. The sinusoid is defined for all x; [x_min, x_max]
/// delimits the experiment region.
CorridorBounds make_track(const TrackSpec& track, double x);

/// The corridor as state constraints g(x) <= 0 on (px, py), with gradients.
std::vector<StateConstraint> corridor_constraints(const TrackSpec& track);

/// Velocity box v_min <= v <= v_max as state constraints.
std::vector<StateConstraint> velocity_constraints(double v_min, double v_max);

} // namespace lfmpc
