#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "palcas/environment.hpp"
#include "palcas/microsim.hpp"

namespace palcas {

/// Outcome tallies for one episode. Rates are percentages; a rate with a zero
/// denominator is absent.
struct EpisodeMetrics {
  int spawned_cavs = 0;
  int collided_cavs = 0;
  int exit_successes = 0;
  int exit_failures = 0;
  int merge_successes = 0;
  int merge_failures = 0;
  std::optional<double> collision_rate;
  std::optional<double> destination_success_rate;
  std::optional<double> merge_success_rate;
  std::optional<double> efficiency;        // m/s, samples inside cluster spans
  std::optional<double> cav_mean_abs_accel;  // m/s^2
};

/// Tallies one episode from its event log and trajectory samples.
/// Exiting CAVs count when they exit (success), miss the junction, or collide
/// before exiting (failure). Ramp CAVs count on their first merge (success),
/// deadlock, or collision (failure). CAVs still driving at the end are left out.
EpisodeMetrics compute_metrics(std::span<const Event> events, std::span<const TrajectorySample> trajectory,
                               const RoadNetwork& network);

struct MetricRow {
  std::string metric;
  std::optional<double> mean;
  std::optional<double> stddev;  // sample standard deviation
  int n = 0;
};

/// Mean and sample standard deviation across episodes, skipping absent values.
std::vector<MetricRow> summarize(std::span<const EpisodeMetrics> episodes);

void write_metrics_csv(std::ostream& out, std::span<const MetricRow> rows);
void write_events_csv(std::ostream& out, std::span<const Event> events);
std::vector<Event> read_events_csv(std::istream& in);
void write_trajectory_csv(std::ostream& out, std::span<const TrajectorySample> samples);
std::vector<TrajectorySample> read_trajectory_csv(std::istream& in);

/// Mean speed per (time, position) cell; cells with no samples are absent.
struct SpaceTimeGrid {
  double bin_t = 1.0, bin_x = 1.0;
  int t_bins = 0, x_bins = 0;
  std::vector<std::optional<double>> cells;  // row-major by time bin

  const std::optional<double>& at(int t, int x) const {
    return cells[static_cast<std::size_t>(t) * static_cast<std::size_t>(x_bins) + static_cast<std::size_t>(x)];
  }
};

SpaceTimeGrid space_time_grid(std::span<const TrajectorySample> samples, double bin_x, double bin_t,
                              double x_extent, double t_extent);
void write_spacetime_csv(std::ostream& out, const SpaceTimeGrid& grid);

/// Empirical CDF with nearest-rank quantiles: q_p = sorted[ceil(p * n) - 1].
struct LatencyCdf {
  std::vector<std::pair<double, double>> points;  // (value, cumulative fraction)
  double p50 = 0.0, p90 = 0.0, p99 = 0.0;
};

double nearest_rank_quantile(std::vector<double> samples, double p);
LatencyCdf inference_cdf(std::span<const double> samples_ms);
void write_cdf_csv(std::ostream& out, const LatencyCdf& cdf);

/// Shortest decimal form that parses back to the same double.
std::string format_double(double value);

}  // namespace palcas
