#pragma once

#include <algorithm>

namespace palcas {

inline constexpr double kAccelMin = -4.5;  // m/s^2
inline constexpr double kAccelMax = 2.6;   // m/s^2
inline constexpr int kActionCount = 4;

/// Discrete action indices as issued by an RSU.
enum class ActionIndex : int { lane_left = 0, lane_right = 1, accelerate = 2, hold = 3 };

/// Discrete choice plus the continuous acceleration parameter; the parameter
/// only matters for ActionIndex::accelerate.
struct HybridAction {
  ActionIndex index = ActionIndex::hold;
  double accel = 0.0;

  static HybridAction make(int index, double accel = 0.0) {
    return {static_cast<ActionIndex>(index), std::clamp(accel, kAccelMin, kAccelMax)};
  }
  int as_int() const { return static_cast<int>(index); }
};

}  // namespace palcas
