#include "lfmpc/track.hpp"

#include <cmath>

namespace lfmpc {

double track_center(const TrackSpec& track, double x) {
    return track.amplitude * std::sin(2.0 * M_PI * x / track.period);
}

double track_center_slope(const TrackSpec& track, double x) {
    const double k = 2.0 * M_PI / track.period;
    return track.amplitude * k * std::cos(k * x);
}

CorridorBounds make_track(const TrackSpec& track, double x) {
    const double center = track_center(track, x);
    return {center - track.half_width, center + track.half_width};
}

std::vector<StateConstraint> corridor_constraints(const TrackSpec& track) {
    std::vector<StateConstraint> cs;
    cs.push_back({"corridor_upper",
                  [track](const Eigen::VectorXd& x, Eigen::VectorXd* grad) {
                      if (grad != nullptr) {
                          grad->setZero(x.size());
                          (*grad)(0) = -track_center_slope(track, x(0));
                          (*grad)(1) = 1.0;
                      }
                      return x(1) - (track_center(track, x(0)) + track.half_width);
                  }});
    cs.push_back({"corridor_lower",
                  [track](const Eigen::VectorXd& x, Eigen::VectorXd* grad) {
                      if (grad != nullptr) {
                          grad->setZero(x.size());
                          (*grad)(0) = track_center_slope(track, x(0));
                          (*grad)(1) = -1.0;
                      }
                      return (track_center(track, x(0)) - track.half_width) - x(1);
                  }});
    return cs;
}

std::vector<StateConstraint> velocity_constraints(double v_min, double v_max) {
    std::vector<StateConstraint> cs;
    cs.push_back({"v_max",
                  [v_max](const Eigen::VectorXd& x, Eigen::VectorXd* grad) {
                      if (grad != nullptr) {
                          grad->setZero(x.size());
                          (*grad)(2) = 1.0;
                      }
                      return x(2) - v_max;
                  }});
    cs.push_back({"v_min",
                  [v_min](const Eigen::VectorXd& x, Eigen::VectorXd* grad) {
                      if (grad != nullptr) {
                          grad->setZero(x.size());
                          (*grad)(2) = -1.0;
                      }
                      return v_min - x(2);
                  }});
    return cs;
}

} // namespace lfmpc
