#include "palcas/road.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "palcas/error.hpp"

namespace palcas {

std::string Route::label() const {
  std::string s = entry_cluster ? "ramp" + std::to_string(*entry_cluster) : std::string("main");
  s += ">";
  s += exit_cluster ? "off" + std::to_string(*exit_cluster) : std::string("end");
  return s;
}

RoadNetwork::RoadNetwork(const GeometryConfig& geometry) : geometry_(geometry) {
  const auto& g = geometry_;
  if (!(g.mainline_length > 0.0)) throw ContractError("mainline_length must be positive");
  if (g.lane_count < 2) throw ContractError("lane_count must be at least 2");
  if (!(g.lane_width > 0.0)) throw ContractError("lane_width must be positive");
  if (g.cluster_count < 1) throw ContractError("cluster_count must be at least 1");
  if (!(g.warmup_length >= 0.0 && g.warmup_length < g.mainline_length))
    throw ContractError("warmup_length must lie in [0, mainline_length)");
  if (!(g.speed_limit > 0.0)) throw ContractError("speed_limit must be positive");
  if (!(g.accel_lane_length > 0.0)) throw ContractError("accel_lane_length must be positive");

  // Clusters partition the mainline downstream of the warm-up zone.
  const double span = (g.mainline_length - g.warmup_length) / g.cluster_count;
  for (int k = 0; k < g.cluster_count; ++k) {
    ClusterZone zone;
    zone.id = k + 1;
    zone.start = g.warmup_length + k * span;
    zone.end = (k + 1 == g.cluster_count) ? g.mainline_length : g.warmup_length + (k + 1) * span;
    zone.on_ramp = {zone.start + g.on_ramp_offset, g.accel_lane_length, RampKind::on};
    zone.off_ramp = {zone.end - g.off_ramp_offset, 0.0, RampKind::off};
    if (!(g.on_ramp_offset >= 0.0 && g.off_ramp_offset > 0.0))
      throw ContractError("ramp offsets must be non-negative (off-ramp strictly positive)");
    if (!(zone.accel_lane_end() < zone.off_ramp.junction_position))
      throw ContractError("acceleration lane must end before the cluster's off-ramp junction");
    clusters_.push_back(zone);
  }
}

const ClusterZone& RoadNetwork::cluster(int id) const {
  if (id < 1 || id > static_cast<int>(clusters_.size())) throw ContractError("unknown cluster id");
  return clusters_[static_cast<std::size_t>(id - 1)];
}

std::optional<int> RoadNetwork::cluster_of(double long_pos) const {
  if (!(long_pos >= 0.0 && long_pos <= geometry_.mainline_length))
    throw ContractError("cluster_of: position outside the mainline");
  for (const auto& zone : clusters_)
    if (long_pos >= zone.start && long_pos < zone.end) return zone.id;
  return std::nullopt;
}

double RoadNetwork::entry_position(const Route& route) const {
  return route.entry_cluster ? cluster(*route.entry_cluster).on_ramp.junction_position : 0.0;
}

double RoadNetwork::exit_position(const Route& route) const {
  return route.exit_cluster ? cluster(*route.exit_cluster).off_ramp.junction_position
                            : geometry_.mainline_length;
}

bool RoadNetwork::valid(const Route& route) const {
  const int k = static_cast<int>(clusters_.size());
  if (route.entry_cluster && (*route.entry_cluster < 1 || *route.entry_cluster > k)) return false;
  if (route.exit_cluster && (*route.exit_cluster < 1 || *route.exit_cluster > k)) return false;
  return exit_position(route) > entry_position(route);
}

std::vector<Route> RoadNetwork::feasible_routes(std::optional<int> entry_cluster,
                                                bool exit_only) const {
  std::vector<Route> routes;
  for (const auto& zone : clusters_) {
    Route r{entry_cluster, zone.id};
    if (valid(r)) routes.push_back(r);
  }
  if (!exit_only) routes.push_back(Route{entry_cluster, std::nullopt});
  return routes;
}

double distance_to_exit(const RoadNetwork& network, const Vehicle& vehicle) {
  return std::max(0.0, network.exit_position(vehicle.route) - vehicle.long_pos);
}

int remaining_lane_count(const Vehicle& vehicle, const RoadNetwork&) {
  if (!vehicle.route.exits_at_ramp()) return 0;
  return std::abs(std::max(vehicle.lane, 1) - 1);
}

}  // namespace palcas
