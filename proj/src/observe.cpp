#include "palcas/observe.hpp"

#include <algorithm>

namespace palcas {

NeighborSet select_neighbors(const Scene& scene, const Vehicle& ego, const ObserveParams& params) {
  NeighborSet slots{};
  const int lanes = scene.network().lane_count();
  const double range = params.sensing_range;
  slots[0] = scene.leader(ego, ego.lane, range);
  slots[1] = scene.follower(ego, ego.lane, range);
  if (ego.lane + 1 <= lanes) {
    slots[2] = scene.leader(ego, ego.lane + 1, range);
    slots[3] = scene.follower(ego, ego.lane + 1, range);
  }
  if (ego.lane - 1 >= 1) {
    slots[4] = scene.leader(ego, ego.lane - 1, range);
    slots[5] = scene.follower(ego, ego.lane - 1, range);
  }
  return slots;
}

Observation encode(const Scene& scene, const Vehicle& ego, std::span<const ClusterStats> stats,
                   const ObserveParams& params) {
  const auto& net = scene.network();
  const double lanes = net.lane_count();
  const double limit = net.speed_limit();
  const double length = net.mainline_length();

  const double probe = std::clamp(ego.long_pos, 0.0, length);
  const int cluster_id = net.cluster_of(probe).value_or(
      probe < net.clusters().front().start ? 1 : static_cast<int>(net.clusters().size()));
  const auto& zone = net.cluster(cluster_id);

  Observation o;
  o[0] = ego.lat_pos / (lanes * net.lane_width());
  o[1] = (ego.long_pos - zone.start) / zone.length();
  o[2] = ego.speed / limit;
  o[3] = ego.accel / params.accel_scale;
  o[4] = ego.lane / lanes;
  o[5] = distance_to_exit(net, ego) / length;

  const auto neighbors = select_neighbors(scene, ego, params);
  for (int s = 0; s < kNeighborSlots; ++s) {
    const int base = 6 + s * kNeighborFeatures;
    if (const Vehicle* m = neighbors[static_cast<std::size_t>(s)]) {
      o[base + 0] = (m->long_pos - ego.long_pos) / params.sensing_range;
      o[base + 1] = (m->speed - ego.speed) / limit;
      o[base + 2] = m->accel / params.accel_scale;
      o[base + 3] = m->lane / lanes;
      o[base + 4] = distance_to_exit(net, *m) / length;
    } else {
      o[base + 0] = 1.0;
      o[base + 1] = 0.0;
      o[base + 2] = 0.0;
      o[base + 3] = ego.lane / lanes;
      o[base + 4] = 1.0;
    }
  }

  o.segment<6>(36).setZero();
  o.segment<3>(42).setZero();
  for (const auto& st : stats) {
    if (st.cluster_id == cluster_id) {
      o[36] = st.mean_speed / limit;
      for (std::size_t l = 0; l < st.lane_density.size() && l < kClusterLanes; ++l)
        o[37 + static_cast<int>(l)] = st.lane_density[l] / params.jam_density;
    }
    if (st.cluster_id >= 1 && st.cluster_id <= kGlobalClusters)
      o[42 + st.cluster_id - 1] = st.density / params.jam_density;
  }
  return o.cwiseMax(-1.0).cwiseMin(1.0);
}

std::vector<std::string> observation_labels() {
  std::vector<std::string> labels = {"ego_lat", "ego_long", "ego_speed", "ego_accel", "ego_lane", "ego_exit_dist"};
  const char* slots[] = {"cur_lead", "cur_follow", "left_lead", "left_follow", "right_lead", "right_follow"};
  const char* feats[] = {"rel_dist", "rel_speed", "accel", "lane", "exit_dist"};
  for (const char* s : slots)
    for (const char* f : feats) labels.push_back(std::string(s) + "_" + f);
  labels.push_back("cluster_speed");
  for (int l = 1; l <= kClusterLanes; ++l) labels.push_back("lane" + std::to_string(l) + "_density");
  for (int c = 1; c <= kGlobalClusters; ++c) labels.push_back("cluster" + std::to_string(c) + "_density");
  return labels;
}

}  // namespace palcas
