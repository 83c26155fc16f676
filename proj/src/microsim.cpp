#include "palcas/microsim.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "palcas/error.hpp"

namespace palcas {

namespace {
constexpr double kTiny = 1e-9;
constexpr std::array<const char*, 8> kEventNames = {
    "spawn", "collision", "arrival", "missed_exit", "abort", "merge", "deadlock", "lane_change"};
}  // namespace

const char* to_string(EventType type) { return kEventNames[static_cast<std::size_t>(type)]; }

std::optional<EventType> event_type_from_string(const std::string& s) {
  for (std::size_t i = 0; i < kEventNames.size(); ++i)
    if (s == kEventNames[i]) return static_cast<EventType>(i);
  return std::nullopt;
}

void SpawnConfig::validate() const {
  if (!(mainline_flow >= 0.0 && ramp_flow >= 0.0)) throw ContractError("flows must be non-negative");
  if (!(cav_penetration >= 0.0 && cav_penetration <= 1.0))
    throw ContractError("cav_penetration must lie in [0, 1]");
  if (!(p_fast >= 0.0 && p_fast <= 1.0)) throw ContractError("p_fast must lie in [0, 1]");
  if (!(slow_speed_factor > 0.0 && slow_speed_factor <= 1.0))
    throw ContractError("slow_speed_factor must lie in (0, 1]");
  if (!(ramp_speed_factor > 0.0 && ramp_speed_factor <= 1.0))
    throw ContractError("ramp_speed_factor must lie in (0, 1]");
}

double idm_acceleration(double speed, double desired_speed, double gap,
                        std::optional<double> leader_speed, const DriverParams& p) {
  const double free_term = 1.0 - std::pow(speed / desired_speed, p.accel_exponent);
  double a = p.max_accel * free_term;
  if (leader_speed) {
    const double approach = speed * (speed - *leader_speed) / (2.0 * std::sqrt(p.max_accel * p.comfort_decel));
    const double desired_gap = p.min_gap + std::max(0.0, speed * p.time_gap + approach);
    const double s = std::max(gap, 0.01);
    a = p.max_accel * (free_term - (desired_gap / s) * (desired_gap / s));
  }
  return std::clamp(a, kAccelMin, kAccelMax);
}

namespace {

bool clear_of_lead(const Vehicle& ego, const Vehicle& lead, const RssParams& params) {
  const double gap = lead.rear() - ego.long_pos;
  return gap > 0.0 && gap >= rss::longitudinal_safe_distance(ego.speed, lead.speed, params);
}

bool clear_of_follower(const Vehicle& ego, const Vehicle& follow, const RssParams& params) {
  const double gap = ego.rear() - follow.long_pos;
  return gap > 0.0 && gap >= rss::longitudinal_safe_distance(follow.speed, ego.speed, params);
}

}  // namespace

bool lane_gap_is_safe(const Scene& scene, const Vehicle& ego, int lane, const RssParams& params) {
  if (const Vehicle* lead = scene.leader(ego, lane); lead && !clear_of_lead(ego, *lead, params)) return false;
  if (const Vehicle* follow = scene.follower(ego, lane); follow && !clear_of_follower(ego, *follow, params))
    return false;
  // A vehicle moving into or out of `lane` from another lane also occupies it;
  // without this two vehicles can merge into one lane side by side.
  for (const Vehicle& o : scene.vehicles()) {
    if (o.id == ego.id || o.lane == lane || !o.maneuver) continue;
    if (o.maneuver->origin_lane != lane && o.maneuver->target_lane != lane) continue;
    const bool ahead = o.long_pos > ego.long_pos || (o.long_pos == ego.long_pos && o.id > ego.id);
    if (ahead ? !clear_of_lead(ego, o, params) : !clear_of_follower(ego, o, params)) return false;
  }
  return true;
}

namespace {

// IDM acceleration of `ego` if it followed the leader of `lane`, including the
// acceleration-lane end as a standing obstacle.
double follow_accel(const Scene& scene, const Vehicle& ego, int lane, const DriverParams& p) {
  const Vehicle* lead = scene.leader(ego, lane);
  double a = lead ? idm_acceleration(ego.speed, ego.max_speed, lead->rear() - ego.long_pos, lead->speed, p)
                  : idm_acceleration(ego.speed, ego.max_speed, 0.0, std::nullopt, p);
  if (lane == 0 && ego.route.entry_cluster) {
    const double end = scene.network().cluster(*ego.route.entry_cluster).accel_lane_end();
    a = std::min(a, idm_acceleration(ego.speed, ego.max_speed, end - ego.long_pos, 0.0, p));
  }
  return a;
}

// Acceleration of `follower` behind a hypothetical leader.
double accel_behind(const Vehicle& follower, const Vehicle* leader, const DriverParams& p) {
  if (!leader) return idm_acceleration(follower.speed, follower.max_speed, 0.0, std::nullopt, p);
  return idm_acceleration(follower.speed, follower.max_speed, leader->rear() - follower.long_pos,
                          leader->speed, p);
}

}  // namespace

HybridAction chv_policy(const Scene& scene, const Vehicle& v, const WorldParams& params) {
  const auto& p = params.driver;
  const auto& net = scene.network();

  if (v.maneuver) {
    const double a = std::min(follow_accel(scene, v, v.maneuver->origin_lane, p),
                              follow_accel(scene, v, v.maneuver->target_lane, p));
    return HybridAction::make(static_cast<int>(ActionIndex::accelerate), a);
  }

  const double a_current = follow_accel(scene, v, v.lane, p);
  const auto keep = HybridAction::make(static_cast<int>(ActionIndex::accelerate), a_current);

  if (v.lane == 0) {
    // Merge as soon as lane 1 has room.
    if (lane_gap_is_safe(scene, v, 1, params.rss)) return HybridAction::make(0);
    return keep;
  }
  if (scene.time() - v.last_lane_change < p.lane_change_cooldown) return keep;

  const double d_exit = distance_to_exit(net, v);
  const bool near_exit = v.route.exits_at_ramp() && d_exit < p.exit_bias_distance;
  if (near_exit && v.lane == 1) return keep;

  const Vehicle* old_follower = scene.follower(v, v.lane);
  const Vehicle* old_leader = scene.leader(v, v.lane);
  double a_o = 0.0, a_o_new = 0.0;
  if (old_follower) {
    a_o = accel_behind(*old_follower, &v, p);
    a_o_new = accel_behind(*old_follower, old_leader, p);
  }

  int best = 0;
  double best_gain = p.change_threshold;
  for (int dir : {-1, +1}) {
    const int target = v.lane + dir;
    if (target < 1 || target > net.lane_count()) continue;
    if (near_exit && dir > 0) continue;
    if (!lane_gap_is_safe(scene, v, target, params.rss)) continue;
    const Vehicle* new_follower = scene.follower(v, target);
    double a_n = 0.0, a_n_new = 0.0;
    if (new_follower) {
      a_n = accel_behind(*new_follower, scene.leader(*new_follower, target), p);
      a_n_new = accel_behind(*new_follower, &v, p);
      if (a_n_new < -p.safe_decel) continue;
    }
    double gain = follow_accel(scene, v, target, p) - a_current +
                  p.politeness * (a_n_new - a_n + a_o_new - a_o);
    if (near_exit) gain += 10.0;
    if (gain > best_gain) {
      best_gain = gain;
      best = dir;
    }
  }
  if (best == 0) return keep;
  return HybridAction::make(best > 0 ? 0 : 1);
}

World::World(std::shared_ptr<const RoadNetwork> network, WorldParams params, std::uint64_t seed)
    : network_(std::move(network)), params_(params), rng_(seed) {
  require(network_ != nullptr, "World needs a road network");
  require(params_.step_size > 0.0, "step_size must be positive");
  require(params_.lane_change_duration > 0.0, "lane_change_duration must be positive");
  params_.rss.validate();
  pending_.resize(static_cast<std::size_t>(network_->lane_count()) + network_->clusters().size());
}

const Vehicle& World::vehicle(VehicleId id) const {
  auto it = vehicles_.find(id);
  if (it == vehicles_.end()) throw ContractError("unknown vehicle id " + std::to_string(id));
  return it->second;
}

Scene World::scene() const {
  std::vector<Vehicle> vs;
  vs.reserve(vehicles_.size());
  for (const auto& [id, v] : vehicles_) vs.push_back(v);
  return Scene(network_, std::move(vs), time());
}

void World::log(EventType type, const Vehicle& v, std::string detail) {
  events_.push_back({time(), type, v.id, v.kind, v.lane, v.long_pos, std::move(detail)});
}

Vehicle World::draw_vehicle(const SpawnConfig& config, std::optional<int> ramp_cluster) {
  Vehicle v;
  v.kind = rng_.bernoulli(config.cav_penetration) ? VehicleKind::cav : VehicleKind::chv;
  const double limit = network_->speed_limit();
  v.max_speed = rng_.bernoulli(config.p_fast) ? limit : config.slow_speed_factor * limit;
  auto routes = network_->feasible_routes(ramp_cluster, config.exit_only);
  if (routes.empty()) routes.push_back(Route{ramp_cluster, std::nullopt});
  v.route = routes[rng_.below(routes.size())];
  v.length = params_.vehicle_length;
  v.width = params_.vehicle_width;
  return v;
}

bool World::try_insert(const Scene& scene, const SpawnConfig& config, Vehicle& cand, int lane,
                       double long_pos) {
  const auto& rss = params_.rss;
  double speed = lane == 0 ? cand.max_speed * config.ramp_speed_factor : cand.max_speed;
  const Vehicle* lead = scene.leader_at(lane, long_pos);
  if (lead && lead->long_pos - long_pos < 200.0) speed = std::min(speed, lead->speed);
  if (lead) {
    const double gap = lead->rear() - long_pos;
    if (gap <= 0.0 || gap < rss::longitudinal_safe_distance(speed, lead->speed, rss)) return false;
  }
  if (const Vehicle* follow = scene.follower_at(lane, long_pos)) {
    const double gap = (long_pos - cand.length) - follow->long_pos;
    if (gap <= 0.0 || gap < rss::longitudinal_safe_distance(follow->speed, speed, rss)) return false;
  }
  cand.id = next_id_++;
  cand.lane = lane;
  cand.long_pos = long_pos;
  cand.lat_pos = network_->lane_center(lane);
  cand.speed = speed;
  cand.on_accel_lane = lane == 0;
  cand.spawn_time = time();
  log(EventType::spawn, cand, "route=" + cand.route.label());
  vehicles_.emplace(cand.id, cand);
  return true;
}

std::vector<VehicleId> World::spawn_step(const SpawnConfig& config) {
  config.validate();
  const Scene sc = scene();
  const int lanes = network_->lane_count();
  std::vector<VehicleId> ids;
  for (std::size_t src = 0; src < pending_.size(); ++src) {
    const bool ramp = static_cast<int>(src) >= lanes;
    const std::optional<int> cluster =
        ramp ? std::optional<int>(static_cast<int>(src) - lanes + 1) : std::nullopt;
    auto& slot = pending_[src];
    if (!slot.active) {
      const double flow = ramp ? config.ramp_flow : config.mainline_flow;
      if (!rng_.bernoulli(std::min(1.0, flow * params_.step_size / 3600.0))) continue;
      slot.vehicle = draw_vehicle(config, cluster);
      slot.active = true;
    }
    const int lane = ramp ? 0 : static_cast<int>(src) + 1;
    const double pos = (ramp ? network_->cluster(*cluster).on_ramp.junction_position : 0.0) +
                       slot.vehicle.length;
    if (try_insert(sc, config, slot.vehicle, lane, pos)) {
      ids.push_back(slot.vehicle.id);
      slot.active = false;
    }
  }
  return ids;
}

VehicleId World::add_vehicle(Vehicle v) {
  if (v.lane < 0 || v.lane > network_->lane_count()) throw ContractError("add_vehicle: lane out of range");
  if (v.lane == 0 && !v.route.entry_cluster) throw ContractError("add_vehicle: lane 0 needs a ramp entry");
  if (!network_->valid(v.route)) throw ContractError("add_vehicle: invalid route");
  if (v.speed < 0.0) throw ContractError("add_vehicle: negative speed");
  v.id = next_id_++;
  v.on_accel_lane = v.lane == 0;
  v.spawn_time = time();
  log(EventType::spawn, v, "route=" + v.route.label());
  vehicles_.emplace(v.id, v);
  return v.id;
}

ActionOutcome World::apply_action(VehicleId id, const HybridAction& action) {
  auto it = vehicles_.find(id);
  if (it == vehicles_.end()) throw ContractError("apply_action: unknown vehicle id " + std::to_string(id));
  Vehicle& v = it->second;
  switch (action.index) {
    case ActionIndex::lane_left:
    case ActionIndex::lane_right: {
      v.commanded_accel = 0.0;
      if (v.maneuver) return ActionOutcome::rejected_busy;
      const int target = v.lane + (action.index == ActionIndex::lane_left ? 1 : -1);
      if (target < 1 || target > network_->lane_count()) return ActionOutcome::rejected_unsafe;
      v.maneuver = LaneChangeManeuver{v.lane, target, time(), params_.lane_change_duration, 0.0, false};
      return ActionOutcome::accepted;
    }
    case ActionIndex::accelerate:
      v.commanded_accel = std::clamp(action.accel, kAccelMin, kAccelMax);
      return ActionOutcome::accepted;
    case ActionIndex::hold:
      v.commanded_accel = 0.0;
      return ActionOutcome::accepted;
  }
  throw ContractError("apply_action: invalid action index");
}

HybridAction World::chv_policy(VehicleId id) const { return palcas::chv_policy(scene(), vehicle(id), params_); }

void World::advance_maneuver(const Scene& before, Vehicle& v, StepReport& report) {
  if (!v.maneuver) {
    v.lat_speed = 0.0;
    return;
  }
  auto& m = *v.maneuver;
  const double lat_before = v.lat_pos;
  const double dt = params_.step_size;

  auto commit = [&] {
    if (m.committed) return;
    m.committed = true;
    v.lane = m.target_lane;
    if (m.origin_lane == 0) v.on_accel_lane = false;
    v.last_lane_change = time();
    log(EventType::lane_change, v,
        "from=" + std::to_string(m.origin_lane) + ";to=" + std::to_string(m.target_lane));
  };

  if (m.committed || lane_gap_is_safe(before, v, m.target_lane, params_.rss))
    m.progress = std::min(1.0, m.progress + dt / m.duration);
  if (m.progress >= 0.5 - kTiny) commit();

  bool done = m.progress >= 1.0 - kTiny;
  const double elapsed = time() - m.start_time;
  if (!done && elapsed >= m.duration - kTiny) {
    if (lane_gap_is_safe(before, v, m.target_lane, params_.rss)) {
      done = true;
    } else {
      v.lane = m.origin_lane;
      v.on_accel_lane = m.origin_lane == 0;
      v.lat_pos = network_->lane_center(m.origin_lane);
      v.maneuver.reset();
      log(EventType::abort, v, "target=" + std::to_string(m.target_lane));
      report.aborted_maneuvers.push_back(v.id);
      v.lat_speed = (v.lat_pos - lat_before) / dt;
      return;
    }
  }

  if (done) {
    commit();
    const bool merged = m.origin_lane == 0;
    v.lat_pos = network_->lane_center(m.target_lane);
    v.maneuver.reset();
    if (merged) log(EventType::merge, v);
  } else {
    const double from = network_->lane_center(m.origin_lane);
    const double to = network_->lane_center(m.target_lane);
    v.lat_pos = from + m.progress * (to - from);
  }
  v.lat_speed = (v.lat_pos - lat_before) / dt;
}

void World::integrate(Vehicle& v) {
  const double dt = params_.step_size;
  const double v0 = v.speed;
  double v1 = std::clamp(v0 + v.commanded_accel * dt, 0.0, std::max(v.max_speed, v0));
  if (v0 > v.max_speed) v1 = std::min(v1, v0);
  v.long_pos += 0.5 * (v0 + v1) * dt;
  v.speed = v1;
  v.accel = (v1 - v0) / dt;
  if (v.lane == 0 && v.route.entry_cluster) {
    const double end = network_->cluster(*v.route.entry_cluster).accel_lane_end();
    if (v.long_pos > end) {
      v.long_pos = end;
      v.speed = 0.0;
      v.accel = -v0 / dt;
    }
  }
}

StepReport World::step() {
  StepReport report;
  const Scene before = scene();
  ++steps_;

  std::map<VehicleId, double> previous_pos;
  for (auto& [id, v] : vehicles_) {
    previous_pos[id] = v.long_pos;
    advance_maneuver(before, v, report);
  }
  for (auto& [id, v] : vehicles_) integrate(v);

  // Deadlock at the end of an acceleration lane.
  for (auto& [id, v] : vehicles_) {
    if (v.lane != 0 || !v.route.entry_cluster) {
      v.stopped_at_lane_end = 0.0;
      continue;
    }
    const double end = network_->cluster(*v.route.entry_cluster).accel_lane_end();
    if (v.long_pos >= end - params_.deadlock_window && v.speed < params_.deadlock_speed) {
      v.stopped_at_lane_end += params_.step_size;
      if (v.stopped_at_lane_end > params_.deadlock_time + kTiny && !v.deadlocked) {
        v.deadlocked = true;
        log(EventType::deadlock, v);
      }
    } else {
      v.stopped_at_lane_end = 0.0;
    }
  }

  // Rectangle overlap; lateral extents follow maneuver progress.
  std::vector<Vehicle*> order;
  order.reserve(vehicles_.size());
  double max_length = 0.0;
  for (auto& [id, v] : vehicles_) {
    order.push_back(&v);
    max_length = std::max(max_length, v.length);
  }
  std::sort(order.begin(), order.end(), [](const Vehicle* a, const Vehicle* b) {
    return a->long_pos < b->long_pos || (a->long_pos == b->long_pos && a->id < b->id);
  });
  std::map<VehicleId, VehicleId> collided;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const Vehicle& a = *order[i];
    for (std::size_t j = i + 1; j < order.size(); ++j) {
      const Vehicle& b = *order[j];
      if (b.long_pos - max_length >= a.long_pos) break;
      const bool long_overlap = b.rear() < a.long_pos && a.rear() < b.long_pos;
      const bool lat_overlap = std::abs(a.lat_pos - b.lat_pos) < 0.5 * (a.width + b.width);
      if (long_overlap && lat_overlap) {
        collided.try_emplace(a.id, b.id);
        collided.try_emplace(b.id, a.id);
      }
    }
  }

  std::vector<VehicleId> to_remove;
  for (const auto& [id, other] : collided) {
    log(EventType::collision, vehicles_.at(id), "with=" + std::to_string(other));
    report.collisions.push_back(id);
    to_remove.push_back(id);
  }

  for (auto& [id, v] : vehicles_) {
    if (collided.count(id)) continue;
    const double before_pos = previous_pos.at(id);
    if (v.route.exits_at_ramp() && !v.missed_exit) {
      const double junction = network_->exit_position(v.route);
      if (before_pos < junction && v.long_pos >= junction) {
        if (v.lane == 1) {
          log(EventType::arrival, v, "exit");
          report.arrivals.push_back(id);
          to_remove.push_back(id);
          continue;
        }
        v.missed_exit = true;
        log(EventType::missed_exit, v, "lane=" + std::to_string(v.lane));
        report.missed_exits.push_back(id);
      }
    }
    if (v.long_pos >= network_->mainline_length()) {
      log(EventType::arrival, v, "end");
      report.arrivals.push_back(id);
      to_remove.push_back(id);
    }
  }

  for (VehicleId id : to_remove) {
    auto it = vehicles_.find(id);
    if (it == vehicles_.end()) continue;
    report.removed.push_back(it->second);
    vehicles_.erase(it);
  }
  return report;
}

}  // namespace palcas
