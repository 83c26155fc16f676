#pragma once

#include <cmath>
#include <limits>

namespace palcas {

struct RssParams {
  double reaction_time = 0.2;   // s
  double accel_max = 2.6;       // m/s^2, worst-case acceleration during the reaction time
  double brake_min = 4.5;       // m/s^2, ego's guaranteed braking
  double brake_max = 4.5;       // m/s^2, leader's worst-case braking
  double lateral_clearance = 0.1;  // m
  double lateral_brake = 1.0;      // m/s^2
  double lateral_accel_max = 1.0;  // m/s^2
  double ttc_threshold = 1.5;      // s
  double sigma_ttc = 0.5;          // feasibility temperature, in (0, 1)

  void validate() const;
};

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

namespace rss {

/// Minimum longitudinal gap the rear vehicle must keep behind its leader.
double longitudinal_safe_distance(double v_ego, double v_lead, const RssParams& params);

/// Minimum lateral gap; speeds are signed positive toward the other vehicle.
double lateral_safe_distance(double v_ego_lat, double v_other_lat, const RssParams& params);

/// Time until the ego closes on the target-lane leader at current speeds.
/// `gap` is front-to-front distance; +inf when not closing, 0 when already overlapping.
double projected_ttc_lead(double v_ego, double v_lead, double gap, double lead_length);

/// Time until the target-lane follower closes on the ego.
double projected_ttc_follow(double v_follow, double v_ego, double gap, double ego_length);

/// p_t = sigmoid((ttc_min - ttc*) / sigma_ttc); +inf maps to 1.
double feasibility(double min_projected_ttc, const RssParams& params);

}  // namespace rss

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace palcas
