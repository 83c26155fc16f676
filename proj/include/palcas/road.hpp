#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace palcas {

/// Geometry knobs; RoadNetwork derives cluster and ramp placement from them.
struct GeometryConfig {
  double mainline_length = 2400.0;  // m
  int lane_count = 5;
  double lane_width = 3.2;          // m
  int cluster_count = 3;
  double warmup_length = 100.0;     // m
  double speed_limit = 33.528;      // m/s
  double accel_lane_length = 200.0; // m
  double on_ramp_offset = 50.0;     // on-ramp junction, measured from cluster start
  double off_ramp_offset = 50.0;    // off-ramp junction, measured back from cluster end
};

enum class RampKind { on, off };

struct RampSpec {
  double junction_position = 0.0;
  double accel_length = 0.0;  // on-ramps only
  RampKind kind = RampKind::on;
};

struct ClusterZone {
  int id = 0;  // 1-based
  double start = 0.0;
  double end = 0.0;
  RampSpec on_ramp;
  RampSpec off_ramp;

  double length() const { return end - start; }
  double accel_lane_end() const { return on_ramp.junction_position + on_ramp.accel_length; }
};

/// Entry is the mainline start or an on-ramp; exit is an off-ramp or the
/// highway end. Cluster ids are 1-based; std::nullopt means mainline.
struct Route {
  std::optional<int> entry_cluster;
  std::optional<int> exit_cluster;

  bool exits_at_ramp() const { return exit_cluster.has_value(); }
  std::string label() const;

  friend bool operator==(const Route&, const Route&) = default;
};

/// Immutable highway: lanes 1..L with lane 1 the rightmost (exit) lane, lane 0
/// the acceleration lane alongside lane 1 where one exists.
class RoadNetwork {
 public:
  explicit RoadNetwork(const GeometryConfig& geometry = {});

  const GeometryConfig& geometry() const { return geometry_; }
  double mainline_length() const { return geometry_.mainline_length; }
  int lane_count() const { return geometry_.lane_count; }
  double lane_width() const { return geometry_.lane_width; }
  double speed_limit() const { return geometry_.speed_limit; }
  double warmup_length() const { return geometry_.warmup_length; }

  const std::vector<ClusterZone>& clusters() const { return clusters_; }
  int cluster_count() const { return static_cast<int>(clusters_.size()); }
  const ClusterZone& cluster(int id) const;

  /// Lateral coordinate of a lane center; 0 is the right edge of lane 1.
  double lane_center(int lane) const { return (lane - 0.5) * geometry_.lane_width; }

  /// Cluster whose [start, end) contains `long_pos`.
  std::optional<int> cluster_of(double long_pos) const;

  double entry_position(const Route& route) const;
  double exit_position(const Route& route) const;

  /// Every route that starts at the given entry and ends strictly downstream.
  std::vector<Route> feasible_routes(std::optional<int> entry_cluster, bool exit_only = false) const;

  /// Canonical routes one to four: mainline to cluster 2, mainline to
  /// cluster 3, mainline through, cluster-1 ramp to cluster 2.
  static Route route_one() { return {std::nullopt, 2}; }
  static Route route_two() { return {std::nullopt, 3}; }
  static Route route_three() { return {std::nullopt, std::nullopt}; }
  static Route route_four() { return {1, 2}; }

  bool valid(const Route& route) const;

 private:
  GeometryConfig geometry_;
  std::vector<ClusterZone> clusters_;
};

enum class VehicleKind { cav, chv };

inline const char* to_string(VehicleKind kind) { return kind == VehicleKind::cav ? "CAV" : "CHV"; }

using VehicleId = std::uint64_t;

struct LaneChangeManeuver {
  int origin_lane = 1;
  int target_lane = 2;
  double start_time = 0.0;
  double duration = 2.0;
  double progress = 0.0;
  bool committed = false;
};

struct Vehicle {
  VehicleId id = 0;
  VehicleKind kind = VehicleKind::chv;
  double long_pos = 0.0;  // front bumper, m along mainline
  double lat_pos = 0.0;   // m from right edge of lane 1
  double lat_speed = 0.0; // m/s, positive to the left
  int lane = 1;
  double speed = 0.0;
  double accel = 0.0;            // applied over the last step
  double commanded_accel = 0.0;  // request for the next step
  double length = 5.0;
  double width = 1.8;
  double max_speed = 33.528;
  Route route;
  std::optional<LaneChangeManeuver> maneuver;
  bool on_accel_lane = false;

  // Bookkeeping used by metrics and the deadlock rule.
  double spawn_time = 0.0;
  bool missed_exit = false;
  bool deadlocked = false;
  double stopped_at_lane_end = 0.0;
  double last_lane_change = -1e9;

  bool is_cav() const { return kind == VehicleKind::cav; }
  double rear() const { return long_pos - length; }
};

/// d_t: remaining distance to the route's exit, clamped at zero.
double distance_to_exit(const RoadNetwork& network, const Vehicle& vehicle);

/// n_t: lane changes still needed to reach lane 1. Through routes report 0,
/// as do vehicles on the acceleration lane.
int remaining_lane_count(const Vehicle& vehicle, const RoadNetwork& network);

}  // namespace palcas
