#include "palcas/rewards.hpp"

#include <algorithm>
#include <cmath>

#include "palcas/action.hpp"
#include "palcas/error.hpp"

namespace palcas {

void RewardWeights::validate() const {
  for (double w : {efficiency, safety, comfort, lane_change, deadlock, cluster_share, ego_share})
    if (!(w >= 0.0)) throw ContractError("reward weights must be non-negative");
  if (!(epsilon > 0.0)) throw ContractError("epsilon must be positive");
  if (!(proximity_scale > 0.0 && deadlock_scale > 0.0 && nominal_lane_change_time > 0.0))
    throw ContractError("reward scales must be positive");
}

namespace reward {

EfficiencyTerms efficiency(double v_ego, double v_max_ego, double v_min_ego, double v_cluster,
                           double v_bar_max, double v_bar_min, const RewardWeights& w) {
  if (!(v_max_ego > v_min_ego) || !(v_bar_max > v_bar_min))
    throw ContractError("efficiency: speed range must be non-degenerate");
  const double r_ego = -std::abs(v_ego - v_max_ego) / (v_max_ego - v_min_ego);
  const double r_cluster = -std::abs(v_cluster - v_bar_max) / (v_bar_max - v_bar_min);
  return {w.cluster_share * r_cluster + w.ego_share * r_ego, r_ego, r_cluster};
}

namespace {
double violation(const GapCheck& g) {
  // A zero required distance is met by any non-negative gap; an overlap
  // against a zero requirement counts as one full violation.
  if (g.safe_distance <= 0.0) return g.gap >= 0.0 ? 0.0 : -1.0;
  return std::min((g.gap - g.safe_distance) / g.safe_distance, 0.0);
}
}  // namespace

SafetyTerms safety(const SafetyInputs& in) {
  double r_long = 0.0;
  if (in.lead) r_long += violation(*in.lead);
  if (in.follow) r_long += violation(*in.follow);
  double r_lat = 0.0;
  for (const auto& g : in.lateral)
    if (g) r_lat += violation(*g);
  return {r_long + r_lat, r_long, r_lat};
}

double comfort(double accel, const RewardWeights& w) {
  return (w.comfort_threshold - std::abs(accel)) / (std::abs(kAccelMin) - kAccelMax);
}

PriorityTerms priority_lane_change(const PriorityInputs& in, const RssParams& rss,
                                   const RewardWeights& w) {
  const double d = in.distance_to_exit;
  const double n = static_cast<double>(in.remaining_lanes);
  const double lanes_m1 = static_cast<double>(in.lane_count - 1);
  const double p_t = rss::feasibility(in.min_projected_ttc, rss);

  const double tau_need = n * w.nominal_lane_change_time / (p_t + w.epsilon);
  const double tau_tte = d / (in.speed + w.epsilon);
  const double u_t = (d < w.exit_distance_threshold && in.speed < w.exit_speed_threshold)
                         ? -p_t
                         : -1.0 / (1.0 + std::exp(tau_tte - tau_need));
  const double proximity = sigmoid(d / w.proximity_scale);
  const double w_t = 2.0 * (1.0 - proximity) * (n / lanes_m1);
  const double p_stage = -2.0 * (proximity - 0.5) * (1.0 - n / lanes_m1);
  return {u_t * w_t + p_stage, u_t, w_t, p_stage, p_t};
}

double deadlock(double x, double len, bool on_accel_lane, const RewardWeights& w) {
  if (!on_accel_lane) return 0.0;
  const double diff = x - len;
  return -std::exp(-(diff * diff) / (w.deadlock_scale * len));
}

double weighted_total(const RewardBreakdown& b, const RewardWeights& w, bool disable_priority) {
  return w.efficiency * b.r_e + w.safety * b.r_s + w.comfort * b.r_c +
         (disable_priority ? 0.0 : w.lane_change * b.r_lc) + w.deadlock * b.r_d;
}

double agent_reward(std::span<const RewardBreakdown> breakdowns) {
  double sum = 0.0;
  for (const auto& b : breakdowns) sum += b.total;
  return sum;
}

SafetyInputs safety_inputs(const Scene& scene, const Vehicle& ego, const RssParams& rss) {
  SafetyInputs in;
  if (const Vehicle* lead = scene.leader(ego, ego.lane))
    in.lead = GapCheck{lead->rear() - ego.long_pos,
                       rss::longitudinal_safe_distance(ego.speed, lead->speed, rss)};
  if (const Vehicle* follow = scene.follower(ego, ego.lane))
    in.follow = GapCheck{ego.rear() - follow->long_pos,
                         rss::longitudinal_safe_distance(follow->speed, ego.speed, rss)};

  // Adjacent vehicles enter the lateral check only while they are also
  // longitudinally inside their RSS distance of the ego.
  const int lanes = scene.network().lane_count();
  std::size_t slot = 0;
  for (int dir : {+1, -1}) {
    const int lane = ego.lane + dir;
    const bool exists = lane >= 1 && lane <= lanes;
    for (bool ahead : {true, false}) {
      const std::size_t index = slot++;
      if (!exists) continue;
      const Vehicle* m = ahead ? scene.leader(ego, lane) : scene.follower(ego, lane);
      if (!m) continue;
      const double long_gap = ahead ? m->rear() - ego.long_pos : ego.rear() - m->long_pos;
      const double long_safe = ahead ? rss::longitudinal_safe_distance(ego.speed, m->speed, rss)
                                     : rss::longitudinal_safe_distance(m->speed, ego.speed, rss);
      if (long_gap >= long_safe) continue;
      const double side = m->lat_pos >= ego.lat_pos ? 1.0 : -1.0;
      const double lat_gap = std::abs(m->lat_pos - ego.lat_pos) - 0.5 * (ego.width + m->width);
      in.lateral[index] =
          GapCheck{lat_gap, rss::lateral_safe_distance(side * ego.lat_speed, -side * m->lat_speed, rss)};
    }
  }
  return in;
}

double min_projected_ttc(const Scene& scene, const Vehicle& ego, int target_lane) {
  double ttc = kInfinity;
  if (const Vehicle* lead = scene.leader(ego, target_lane))
    ttc = std::min(ttc, rss::projected_ttc_lead(ego.speed, lead->speed, lead->long_pos - ego.long_pos,
                                                lead->length));
  if (const Vehicle* follow = scene.follower(ego, target_lane))
    ttc = std::min(ttc, rss::projected_ttc_follow(follow->speed, ego.speed,
                                                  ego.long_pos - follow->long_pos, ego.length));
  return ttc;
}

Context::Context(const Scene& s, const RewardWeights& w, const RssParams& r, bool disable)
    : scene(s), stats(s.all_cluster_stats()), weights(w), rss(r), disable_priority(disable) {}

RewardBreakdown vehicle_reward(const Context& ctx, const Vehicle& ego) {
  const auto& net = ctx.scene.network();
  const auto& w = ctx.weights;
  RewardBreakdown b;

  const double limit = net.speed_limit();
  double v_cluster = limit;
  const double probe = std::clamp(ego.long_pos, 0.0, net.mainline_length());
  if (auto c = net.cluster_of(probe)) v_cluster = ctx.stats[static_cast<std::size_t>(*c - 1)].mean_speed;
  const auto eff = efficiency(ego.speed, limit, 0.0, v_cluster, limit, 0.0, w);
  b.r_e = eff.r_e;
  b.r_ego = eff.r_ego;
  b.r_cluster = eff.r_cluster;

  const auto s = safety(safety_inputs(ctx.scene, ego, ctx.rss));
  b.r_s = s.r_s;
  b.r_s_long = s.r_long;
  b.r_s_lat = s.r_lat;

  b.r_c = comfort(ego.accel, w);

  PriorityInputs pin;
  pin.distance_to_exit = distance_to_exit(net, ego);
  pin.speed = ego.speed;
  pin.remaining_lanes = remaining_lane_count(ego, net);
  pin.lane_count = net.lane_count();
  pin.min_projected_ttc = pin.remaining_lanes > 0 ? min_projected_ttc(ctx.scene, ego, ego.lane - 1) : kInfinity;
  const auto pr = priority_lane_change(pin, ctx.rss, w);
  b.r_lc = pr.r_lc;
  b.u_t = pr.u_t;
  b.w_t = pr.w_t;
  b.p_stage = pr.p_stage;
  b.p_t = pr.p_t;

  if (ego.lane == 0 && ego.route.entry_cluster) {
    const auto& ramp = net.cluster(*ego.route.entry_cluster).on_ramp;
    const double x = std::clamp(ego.long_pos - ramp.junction_position, 0.0, ramp.accel_length);
    b.r_d = deadlock(x, ramp.accel_length, true, w);
  }

  b.total = weighted_total(b, w, ctx.disable_priority);
  return b;
}

}  // namespace reward
}  // namespace palcas
