#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "palcas/action.hpp"
#include "palcas/random.hpp"
#include "palcas/road.hpp"
#include "palcas/rss.hpp"
#include "palcas/scene.hpp"

namespace palcas {

struct SpawnConfig {
  double mainline_flow = 3200.0;  // veh/h/lane
  double ramp_flow = 600.0;       // veh/h/lane
  double cav_penetration = 0.6;
  double p_fast = 0.5;            // probability of max speed = speed limit
  double slow_speed_factor = 0.85;
  double ramp_speed_factor = 0.7; // insertion speed on the acceleration lane, fraction of max speed
  bool exit_only = false;         // restrict routes to off-ramp exits

  void validate() const;
};

/// Human-driver stand-in: IDM car following plus MOBIL lane changes.
struct DriverParams {
  double time_gap = 1.0;        // s
  double max_accel = 2.6;       // m/s^2
  double comfort_decel = 4.5;   // m/s^2
  double min_gap = 2.0;         // m
  double accel_exponent = 4.0;
  double politeness = 0.2;
  double change_threshold = 0.2;  // m/s^2
  double safe_decel = 4.0;        // m/s^2
  double exit_bias_distance = 500.0;  // m
  double lane_change_cooldown = 3.0;  // s
};

struct WorldParams {
  double step_size = 0.1;             // s
  double lane_change_duration = 2.0;  // s
  double vehicle_length = 5.0;
  double vehicle_width = 1.8;
  double deadlock_speed = 0.5;        // m/s
  double deadlock_window = 5.0;       // m before the acceleration-lane end
  double deadlock_time = 10.0;        // s
  RssParams rss;
  DriverParams driver;
};

enum class EventType { spawn, collision, arrival, missed_exit, abort, merge, deadlock, lane_change };

const char* to_string(EventType type);
std::optional<EventType> event_type_from_string(const std::string& s);

struct Event {
  double time = 0.0;
  EventType type = EventType::spawn;
  VehicleId vehicle_id = 0;
  VehicleKind kind = VehicleKind::chv;
  int lane = 0;
  double long_pos = 0.0;
  std::string detail;

  friend bool operator==(const Event&, const Event&) = default;
};

enum class ActionOutcome { accepted, rejected_unsafe, rejected_busy };

struct StepReport {
  std::vector<VehicleId> collisions;
  std::vector<VehicleId> arrivals;
  std::vector<VehicleId> missed_exits;
  std::vector<VehicleId> aborted_maneuvers;
  std::vector<Vehicle> removed;  // final states of collided and arrived vehicles
};

/// IDM acceleration toward `desired_speed`; `gap` is bumper-to-bumper and
/// ignored when `leader_speed` is empty.
double idm_acceleration(double speed, double desired_speed, double gap,
                        std::optional<double> leader_speed, const DriverParams& params);

/// True when `ego` fits between the leader and follower of `lane` with RSS
/// longitudinal distances on both sides.
bool lane_gap_is_safe(const Scene& scene, const Vehicle& ego, int lane, const RssParams& params);

/// Rule-based action for a human-driven vehicle (also used for CAVs that no
/// RSU currently controls).
HybridAction chv_policy(const Scene& scene, const Vehicle& vehicle, const WorldParams& params);

/// Single-writer discrete-time highway world.
class World {
 public:
  World(std::shared_ptr<const RoadNetwork> network, WorldParams params, std::uint64_t seed);

  const RoadNetwork& network() const { return *network_; }
  const std::shared_ptr<const RoadNetwork>& network_ptr() const { return network_; }
  const WorldParams& params() const { return params_; }
  double time() const { return static_cast<double>(steps_) * params_.step_size; }
  std::uint64_t steps() const { return steps_; }

  const std::map<VehicleId, Vehicle>& vehicles() const { return vehicles_; }
  const Vehicle& vehicle(VehicleId id) const;
  bool contains(VehicleId id) const { return vehicles_.count(id) > 0; }
  const std::vector<Event>& events() const { return events_; }
  std::uint64_t spawned_count() const { return next_id_ - 1; }

  /// Snapshot for observation, reward, and driver-model queries.
  Scene scene() const;

  std::vector<VehicleId> spawn_step(const SpawnConfig& config);

  /// Insert a fully specified vehicle (tests, benchmarks); the id is assigned
  /// here and a spawn event is logged.
  VehicleId add_vehicle(Vehicle vehicle);

  ActionOutcome apply_action(VehicleId id, const HybridAction& action);
  HybridAction chv_policy(VehicleId id) const;

  StepReport step();

 private:
  struct PendingSpawn {
    Vehicle vehicle;
    bool active = false;
  };

  void log(EventType type, const Vehicle& v, std::string detail = {});
  Vehicle draw_vehicle(const SpawnConfig& config, std::optional<int> ramp_cluster);
  bool try_insert(const Scene& scene, const SpawnConfig& config, Vehicle& candidate, int lane,
                  double long_pos);
  void advance_maneuver(const Scene& before, Vehicle& v, StepReport& report);
  void integrate(Vehicle& v);

  std::shared_ptr<const RoadNetwork> network_;
  WorldParams params_;
  Rng rng_;
  std::map<VehicleId, Vehicle> vehicles_;
  std::vector<Event> events_;
  std::vector<PendingSpawn> pending_;  // mainline lanes 1..L, then one per on-ramp
  std::uint64_t steps_ = 0;
  VehicleId next_id_ = 1;
};

}  // namespace palcas
