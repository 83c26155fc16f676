#pragma once

#include <Eigen/Core>
#include <array>
#include <span>
#include <string>
#include <vector>

#include "palcas/scene.hpp"

namespace palcas {

inline constexpr int kObservationSize = 45;
inline constexpr int kNeighborSlots = 6;
inline constexpr int kNeighborFeatures = 5;
inline constexpr int kClusterLanes = 5;
inline constexpr int kGlobalClusters = 3;

/// Layout (schema version 1):
///   [0, 6)   ego: lateral pos, longitudinal pos in cluster, speed, accel, lane, distance to exit
///   [6, 36)  six neighbor slots x (relative distance, relative speed, accel, lane, distance to exit)
///            slot order: current lead, current follow, left lead, left follow, right lead, right follow
///   [36, 42) ego cluster: mean speed, densities of lanes 1..5
///   [42, 45) mean density of clusters 1..3
using Observation = Eigen::Matrix<double, kObservationSize, 1>;

inline constexpr int kObservationSchemaVersion = 1;

struct ObserveParams {
  double sensing_range = 200.0;  // m
  double jam_density = 0.2;      // veh/m/lane
  double accel_scale = 4.5;      // m/s^2
};

enum class NeighborSlot { current_lead, current_follow, left_lead, left_follow, right_lead, right_follow };

using NeighborSet = std::array<const Vehicle*, kNeighborSlots>;

NeighborSet select_neighbors(const Scene& scene, const Vehicle& ego, const ObserveParams& params = {});

Observation encode(const Scene& scene, const Vehicle& ego, std::span<const ClusterStats> stats,
                   const ObserveParams& params = {});

/// Column names for the debug observation dump.
std::vector<std::string> observation_labels();

}  // namespace palcas
