#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "palcas/microsim.hpp"
#include "palcas/observe.hpp"
#include "palcas/pdqn.hpp"
#include "palcas/rewards.hpp"

namespace palcas {

struct EnvConfig {
  GeometryConfig geometry;
  SpawnConfig spawn;
  WorldParams world;
  RewardWeights rewards;
  ObserveParams observe;
  bool disable_priority_reward = false;
  double episode_length = 600.0;  // s
};

struct TrajectorySample {
  double time = 0.0;
  VehicleId vehicle_id = 0;
  VehicleKind kind = VehicleKind::chv;
  int lane = 0;
  double long_pos = 0.0;
  double lat_pos = 0.0;
  double speed = 0.0;
  double accel = 0.0;
};

/// Observations one agent must act on this tick.
struct AgentView {
  std::vector<VehicleId> vehicles;
  std::vector<Observation> observations;
};

struct TickOutcome {
  std::vector<std::vector<Transition>> transitions;  // per agent
  std::vector<RewardBreakdown> breakdowns;            // one per controlled CAV, agent order
  StepReport report;
};

/// One episode of the shared highway with CAVs handed to agents by cluster.
/// A tick is begin_tick() (spawn, observe), the caller's action choice, then
/// end_tick(actions) (apply, step, reward).
class Environment {
 public:
  /// `cluster_owner[c - 1]` is the agent controlling cluster c.
  Environment(const EnvConfig& config, std::vector<int> cluster_owner, std::uint64_t seed);

  int agent_count() const { return agents_; }
  const EnvConfig& config() const { return config_; }
  const World& world() const { return *world_; }
  World& world() { return *world_; }
  bool done() const { return world_->time() >= config_.episode_length - 1e-9; }

  /// Starts a fresh episode.
  void reset(std::uint64_t seed);

  const std::vector<AgentView>& begin_tick();
  TickOutcome end_tick(const std::vector<std::vector<HybridAction>>& actions);

  void set_record_trajectory(bool on) { record_trajectory_ = on; }
  const std::vector<TrajectorySample>& trajectory() const { return trajectory_; }

 private:
  EnvConfig config_;
  std::shared_ptr<const RoadNetwork> network_;
  std::vector<int> owner_;
  int agents_ = 0;
  std::unique_ptr<World> world_;
  std::vector<AgentView> views_;
  std::optional<Scene> tick_scene_;
  bool in_tick_ = false;
  bool record_trajectory_ = false;
  std::vector<TrajectorySample> trajectory_;
};

/// Agent index per cluster for each federation topology.
std::vector<int> per_cluster_owners(int clusters);
std::vector<int> single_owner(int clusters);

}  // namespace palcas
