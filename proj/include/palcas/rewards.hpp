#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "palcas/rss.hpp"
#include "palcas/scene.hpp"

namespace palcas {

/// Weights and thresholds of the multi-objective reward.
struct RewardWeights {
  double efficiency = 0.05;   // iota
  double safety = 0.5;        // zeta
  double comfort = 0.05;      // xi
  double lane_change = 0.4;   // lambda
  double deadlock = 0.1;      // psi
  double cluster_share = 0.5; // w_c
  double ego_share = 0.5;     // w_e
  double comfort_threshold = 1.47;  // m/s^2
  double nominal_lane_change_time = 2.0;  // s, tau_0
  double exit_distance_threshold = 50.0;  // m, d_th
  double exit_speed_threshold = 5.0;      // m/s, v_th
  double deadlock_scale = 10.0;           // beta
  double epsilon = 1e-6;
  double proximity_scale = 1000.0;        // m

  void validate() const;
};

/// Every component of one CAV's reward at one tick, plus the sub-terms.
struct RewardBreakdown {
  double r_e = 0.0, r_s = 0.0, r_c = 0.0, r_lc = 0.0, r_d = 0.0;
  double total = 0.0;
  double r_ego = 0.0, r_cluster = 0.0;
  double r_s_long = 0.0, r_s_lat = 0.0;
  double u_t = 0.0, w_t = 0.0, p_stage = 0.0, p_t = 1.0;
};

namespace reward {

struct EfficiencyTerms {
  double r_e, r_ego, r_cluster;
};

EfficiencyTerms efficiency(double v_ego, double v_max_ego, double v_min_ego, double v_cluster,
                           double v_bar_max, double v_bar_min, const RewardWeights& weights);

/// Longitudinal neighbor: actual bumper gap and its RSS distance.
struct GapCheck {
  double gap = 0.0;
  double safe_distance = 0.0;
};

struct SafetyInputs {
  std::optional<GapCheck> lead, follow;
  std::array<std::optional<GapCheck>, 4> lateral;
};

struct SafetyTerms {
  double r_s, r_long, r_lat;
};

/// min((d - delta) / delta, 0) summed over present neighbors.
SafetyTerms safety(const SafetyInputs& inputs);

double comfort(double accel, const RewardWeights& weights);

struct PriorityInputs {
  double distance_to_exit = 0.0;  // d_t
  double speed = 0.0;             // v_ego
  int remaining_lanes = 0;        // n_t
  int lane_count = 5;             // L
  double min_projected_ttc = kInfinity;
};

struct PriorityTerms {
  double r_lc, u_t, w_t, p_stage, p_t;
};

PriorityTerms priority_lane_change(const PriorityInputs& in, const RssParams& rss,
                                   const RewardWeights& weights);

double deadlock(double position_on_lane, double accel_lane_length, bool on_accel_lane,
                const RewardWeights& weights);

/// Weighted sum; the lane-change term is dropped when `disable_priority` is set.
double weighted_total(const RewardBreakdown& b, const RewardWeights& weights, bool disable_priority);

double agent_reward(std::span<const RewardBreakdown> breakdowns);

// Scene-level assembly: neighbor lookup and RSS distances for one vehicle.

SafetyInputs safety_inputs(const Scene& scene, const Vehicle& ego, const RssParams& rss);

/// Minimum projected time-to-collision for moving one lane toward the exit.
double min_projected_ttc(const Scene& scene, const Vehicle& ego, int target_lane);

struct Context {
  const Scene& scene;
  std::vector<ClusterStats> stats;
  const RewardWeights& weights;
  const RssParams& rss;
  bool disable_priority = false;

  Context(const Scene& s, const RewardWeights& w, const RssParams& r, bool disable = false);
};

RewardBreakdown vehicle_reward(const Context& ctx, const Vehicle& ego);

}  // namespace reward
}  // namespace palcas
