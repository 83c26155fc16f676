#include "palcas/rss.hpp"

#include <algorithm>
#include <cmath>

#include "palcas/error.hpp"

namespace palcas {

void RssParams::validate() const {
  if (!(reaction_time > 0 && accel_max > 0 && brake_min > 0 && brake_max > 0 &&
        lateral_clearance > 0 && lateral_brake > 0 && lateral_accel_max > 0 && ttc_threshold > 0))
    throw ContractError("rss parameters must be positive");
  if (!(sigma_ttc > 0.0 && sigma_ttc < 1.0)) throw ContractError("sigma_ttc must lie in (0, 1)");
}

namespace rss {

double longitudinal_safe_distance(double v_ego, double v_lead, const RssParams& p) {
  if (v_ego < 0.0 || v_lead < 0.0) throw ContractError("longitudinal_safe_distance: negative speed");
  const double rho = p.reaction_time;
  const double v_resp = v_ego + rho * p.accel_max;
  const double d = v_ego * rho + 0.5 * p.accel_max * rho * rho + v_resp * v_resp / (2.0 * p.brake_min) -
                   v_lead * v_lead / (2.0 * p.brake_max);
  return std::max(d, 0.0);
}

double lateral_safe_distance(double v_i, double v_m, const RssParams& p) {
  const double rho = p.reaction_time;
  const double v_i_rho = v_i + rho * p.lateral_accel_max;
  const double v_m_rho = v_m + rho * p.lateral_accel_max;
  const double ego_term = 0.5 * (v_i + v_i_rho) * rho + v_i_rho * v_i_rho / (2.0 * p.lateral_brake);
  const double other_term = 0.5 * (v_m + v_m_rho) * rho - v_m_rho * v_m_rho / (2.0 * p.lateral_brake);
  return p.lateral_clearance + std::max(ego_term - other_term, 0.0);
}

namespace {
double closing_time(double clearance, double closing_speed) {
  if (!(closing_speed > 0.0)) return kInfinity;
  return std::max(clearance / closing_speed, 0.0);
}
}  // namespace

double projected_ttc_lead(double v_ego, double v_lead, double gap, double lead_length) {
  return closing_time(gap - lead_length, v_ego - v_lead);
}

double projected_ttc_follow(double v_follow, double v_ego, double gap, double ego_length) {
  return closing_time(gap - ego_length, v_follow - v_ego);
}

double feasibility(double min_ttc, const RssParams& p) {
  if (std::isinf(min_ttc) && min_ttc > 0) return 1.0;
  return sigmoid((min_ttc - p.ttc_threshold) / p.sigma_ttc);
}

}  // namespace rss
}  // namespace palcas
