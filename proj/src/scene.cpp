#include "palcas/scene.hpp"

#include <algorithm>

#include "palcas/error.hpp"

namespace palcas {

namespace {
bool before(const Vehicle* a, double pos, VehicleId id) {
  return a->long_pos < pos || (a->long_pos == pos && a->id < id);
}
}  // namespace

Scene::Scene(std::shared_ptr<const RoadNetwork> network, std::vector<Vehicle> vehicles, double time)
    : network_(std::move(network)), vehicles_(std::move(vehicles)), time_(time) {
  require(network_ != nullptr, "Scene needs a road network");
  std::sort(vehicles_.begin(), vehicles_.end(),
            [](const Vehicle& a, const Vehicle& b) { return a.id < b.id; });
  lanes_.assign(static_cast<std::size_t>(network_->lane_count() + 1), {});
  for (const auto& v : vehicles_) {
    if (v.lane < 0 || v.lane > network_->lane_count()) throw ContractError("vehicle lane out of range");
    lanes_[static_cast<std::size_t>(v.lane)].push_back(&v);
  }
  for (auto& lane : lanes_)
    std::sort(lane.begin(), lane.end(), [](const Vehicle* a, const Vehicle* b) {
      return a->long_pos < b->long_pos || (a->long_pos == b->long_pos && a->id < b->id);
    });
}

const Vehicle* Scene::find(VehicleId id) const {
  auto it = std::lower_bound(vehicles_.begin(), vehicles_.end(), id,
                             [](const Vehicle& v, VehicleId key) { return v.id < key; });
  return (it != vehicles_.end() && it->id == id) ? &*it : nullptr;
}

std::span<const Vehicle* const> Scene::lane_vehicles(int lane) const {
  if (lane < 0 || lane > network_->lane_count()) return {};
  return lanes_[static_cast<std::size_t>(lane)];
}

namespace {
const Vehicle* first_after(std::span<const Vehicle* const> lane, double pos, VehicleId id,
                           double range) {
  auto it = std::upper_bound(lane.begin(), lane.end(), std::pair{pos, id},
                             [](const std::pair<double, VehicleId>& key, const Vehicle* v) {
                               return key.first < v->long_pos ||
                                      (key.first == v->long_pos && key.second < v->id);
                             });
  if (it == lane.end()) return nullptr;
  return ((*it)->long_pos - pos <= range) ? *it : nullptr;
}

const Vehicle* last_before(std::span<const Vehicle* const> lane, double pos, VehicleId id,
                           double range) {
  auto it = std::lower_bound(lane.begin(), lane.end(), std::pair{pos, id},
                             [](const Vehicle* v, const std::pair<double, VehicleId>& key) {
                               return before(v, key.first, key.second);
                             });
  if (it == lane.begin()) return nullptr;
  const Vehicle* v = *(it - 1);
  return (pos - v->long_pos <= range) ? v : nullptr;
}
}  // namespace

const Vehicle* Scene::leader(const Vehicle& ego, int lane, double range) const {
  return first_after(lane_vehicles(lane), ego.long_pos, ego.id, range);
}

const Vehicle* Scene::follower(const Vehicle& ego, int lane, double range) const {
  return last_before(lane_vehicles(lane), ego.long_pos, ego.id, range);
}

const Vehicle* Scene::leader_at(int lane, double long_pos, double range) const {
  // A probe id of 0 sorts before every real vehicle at the same position.
  return first_after(lane_vehicles(lane), long_pos, 0, range);
}

const Vehicle* Scene::follower_at(int lane, double long_pos, double range) const {
  return last_before(lane_vehicles(lane), long_pos, 0, range);
}

ClusterStats Scene::cluster_stats(int cluster_id) const {
  const auto& zone = network_->cluster(cluster_id);
  const int lanes = network_->lane_count();
  ClusterStats stats;
  stats.cluster_id = cluster_id;
  stats.lane_density.assign(static_cast<std::size_t>(lanes), 0.0);
  double speed_sum = 0.0;
  for (const auto& v : vehicles_) {
    if (v.long_pos < zone.start || v.long_pos >= zone.end) continue;
    ++stats.vehicle_count;
    speed_sum += v.speed;
    if (v.lane >= 1) stats.lane_density[static_cast<std::size_t>(v.lane - 1)] += 1.0;
  }
  double total = 0.0;
  for (auto& d : stats.lane_density) {
    total += d;
    d /= zone.length();
  }
  stats.density = total / (zone.length() * lanes);
  stats.mean_speed = stats.vehicle_count > 0 ? speed_sum / stats.vehicle_count : network_->speed_limit();
  return stats;
}

std::vector<ClusterStats> Scene::all_cluster_stats() const {
  std::vector<ClusterStats> out;
  for (const auto& zone : network_->clusters()) out.push_back(cluster_stats(zone.id));
  return out;
}

}  // namespace palcas
