#pragma once

#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "palcas/road.hpp"

namespace palcas {

/// Macroscopic state of one cluster at one tick.
struct ClusterStats {
  int cluster_id = 0;
  double mean_speed = 0.0;          // m/s over vehicles in the span; speed limit when empty
  std::vector<double> lane_density; // veh/m for lanes 1..L
  double density = 0.0;             // veh/m/lane averaged over lanes
  int vehicle_count = 0;
};

/// Read-only view of all vehicles at one instant with per-lane ordering by
/// (long_pos, id). Observation, reward, and driver-model code query it.
class Scene {
 public:
  Scene(std::shared_ptr<const RoadNetwork> network, std::vector<Vehicle> vehicles, double time = 0.0);

  // Lane indexes point into vehicles_, so copies are not allowed; moves keep the buffer.
  Scene(const Scene&) = delete;
  Scene& operator=(const Scene&) = delete;
  Scene(Scene&&) noexcept = default;
  Scene& operator=(Scene&&) noexcept = default;

  const RoadNetwork& network() const { return *network_; }
  const std::shared_ptr<const RoadNetwork>& network_ptr() const { return network_; }
  std::span<const Vehicle> vehicles() const { return vehicles_; }
  double time() const { return time_; }
  const Vehicle* find(VehicleId id) const;

  /// Nearest vehicle ahead of `ego` in `lane` (ego excluded); ties in position
  /// resolve by id so every vehicle has a well-defined place in the order.
  const Vehicle* leader(const Vehicle& ego, int lane, double range = kNoRange) const;
  const Vehicle* follower(const Vehicle& ego, int lane, double range = kNoRange) const;
  /// Same query for an arbitrary probe point (used when inserting vehicles).
  const Vehicle* leader_at(int lane, double long_pos, double range = kNoRange) const;
  const Vehicle* follower_at(int lane, double long_pos, double range = kNoRange) const;

  /// Vehicles committed to `lane`, ascending by (long_pos, id).
  std::span<const Vehicle* const> lane_vehicles(int lane) const;

  ClusterStats cluster_stats(int cluster_id) const;
  std::vector<ClusterStats> all_cluster_stats() const;

  static constexpr double kNoRange = 1e300;

 private:
  std::shared_ptr<const RoadNetwork> network_;
  std::vector<Vehicle> vehicles_;
  double time_ = 0.0;
  std::vector<std::vector<const Vehicle*>> lanes_;  // index 0 = acceleration lanes
};

}  // namespace palcas
