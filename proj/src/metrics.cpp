#include "palcas/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "palcas/error.hpp"

namespace palcas {

std::string format_double(double value) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, r.ptr);
}

namespace {

std::optional<double> percent(int num, int den) {
  if (den <= 0) return std::nullopt;
  return 100.0 * num / den;
}

struct Tally {
  bool cav = false, ramp = false, exiting = false, collided = false;
  int exit_outcome = 0;   // +1 success, -1 failure
  int merge_outcome = 0;
};

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream s(line);
  while (std::getline(s, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s) {
  double v = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw std::runtime_error("bad number in CSV: " + s);
  return v;
}

template <typename I>
I parse_int(const std::string& s) {
  I v{};
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw std::runtime_error("bad integer in CSV: " + s);
  return v;
}

VehicleKind parse_kind(const std::string& s) {
  if (s == "CAV") return VehicleKind::cav;
  if (s == "CHV") return VehicleKind::chv;
  throw std::runtime_error("bad vehicle kind in CSV: " + s);
}

}  // namespace

EpisodeMetrics compute_metrics(std::span<const Event> events, std::span<const TrajectorySample> trajectory,
                               const RoadNetwork& network) {
  std::map<VehicleId, Tally> tally;
  for (const Event& e : events) {
    if (e.type == EventType::spawn) {
      Tally t;
      t.cav = e.kind == VehicleKind::cav;
      t.ramp = e.lane == 0;
      t.exiting = e.detail.find(">off") != std::string::npos;
      tally[e.vehicle_id] = t;
      continue;
    }
    auto it = tally.find(e.vehicle_id);
    if (it == tally.end()) continue;
    Tally& t = it->second;
    switch (e.type) {
      case EventType::collision:
        t.collided = true;
        if (t.exiting && t.exit_outcome == 0) t.exit_outcome = -1;
        if (t.ramp && t.merge_outcome == 0) t.merge_outcome = -1;
        break;
      case EventType::arrival:
        if (t.exiting && t.exit_outcome == 0 && e.detail == "exit") t.exit_outcome = 1;
        break;
      case EventType::missed_exit:
        if (t.exiting && t.exit_outcome == 0) t.exit_outcome = -1;
        break;
      case EventType::merge:
        if (t.ramp && t.merge_outcome == 0) t.merge_outcome = 1;
        break;
      case EventType::deadlock:
        if (t.ramp && t.merge_outcome == 0) t.merge_outcome = -1;
        break;
      default:
        break;
    }
  }

  EpisodeMetrics m;
  for (const auto& [id, t] : tally) {
    if (!t.cav) continue;
    ++m.spawned_cavs;
    if (t.collided) ++m.collided_cavs;
    if (t.exit_outcome > 0) ++m.exit_successes;
    if (t.exit_outcome < 0) ++m.exit_failures;
    if (t.merge_outcome > 0) ++m.merge_successes;
    if (t.merge_outcome < 0) ++m.merge_failures;
  }
  m.collision_rate = percent(m.collided_cavs, m.spawned_cavs);
  m.destination_success_rate = percent(m.exit_successes, m.exit_successes + m.exit_failures);
  m.merge_success_rate = percent(m.merge_successes, m.merge_successes + m.merge_failures);

  double speed_sum = 0.0, accel_sum = 0.0;
  long long speed_n = 0, accel_n = 0;
  for (const auto& s : trajectory) {
    if (network.cluster_of(std::clamp(s.long_pos, 0.0, network.mainline_length()))) {
      speed_sum += s.speed;
      ++speed_n;
    }
    if (auto it = tally.find(s.vehicle_id); it != tally.end() && it->second.cav) {
      accel_sum += std::abs(s.accel);
      ++accel_n;
    }
  }
  if (speed_n > 0) m.efficiency = speed_sum / static_cast<double>(speed_n);
  if (accel_n > 0) m.cav_mean_abs_accel = accel_sum / static_cast<double>(accel_n);
  return m;
}

std::vector<MetricRow> summarize(std::span<const EpisodeMetrics> episodes) {
  auto row = [&](const std::string& name, auto get) {
    std::vector<double> values;
    for (const auto& e : episodes)
      if (const std::optional<double> v = get(e)) values.push_back(*v);
    MetricRow r;
    r.metric = name;
    r.n = static_cast<int>(values.size());
    if (values.empty()) return r;
    double sum = 0.0;
    for (double v : values) sum += v;
    const double mean = sum / static_cast<double>(values.size());
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    r.mean = mean;
    r.stddev = values.size() > 1 ? std::sqrt(ss / static_cast<double>(values.size() - 1)) : 0.0;
    return r;
  };
  using E = EpisodeMetrics;
  using O = std::optional<double>;
  return {
      row("efficiency", [](const E& e) { return e.efficiency; }),
      row("collision_rate", [](const E& e) { return e.collision_rate; }),
      row("collision_rate_denominator", [](const E& e) { return O(e.spawned_cavs); }),
      row("destination_success_rate", [](const E& e) { return e.destination_success_rate; }),
      row("destination_success_rate_denominator",
          [](const E& e) { return O(e.exit_successes + e.exit_failures); }),
      row("merge_success_rate", [](const E& e) { return e.merge_success_rate; }),
      row("merge_success_rate_denominator", [](const E& e) { return O(e.merge_successes + e.merge_failures); }),
      row("cav_mean_abs_accel", [](const E& e) { return e.cav_mean_abs_accel; }),
  };
}

void write_metrics_csv(std::ostream& out, std::span<const MetricRow> rows) {
  out << "metric,mean,std,n\n";
  for (const auto& r : rows) {
    out << r.metric << ',';
    if (r.mean) out << format_double(*r.mean);
    out << ',';
    if (r.stddev) out << format_double(*r.stddev);
    out << ',' << r.n << '\n';
  }
}

void write_events_csv(std::ostream& out, std::span<const Event> events) {
  out << "time,event,vehicle_id,kind,lane,long_pos,detail\n";
  for (const auto& e : events) {
    if (e.detail.find(',') != std::string::npos) throw ContractError("event detail must not contain commas");
    out << format_double(e.time) << ',' << to_string(e.type) << ',' << e.vehicle_id << ',' << to_string(e.kind)
        << ',' << e.lane << ',' << format_double(e.long_pos) << ',' << e.detail << '\n';
  }
}

std::vector<Event> read_events_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "time,event,vehicle_id,kind,lane,long_pos,detail")
    throw std::runtime_error("events CSV: unexpected header");
  std::vector<Event> events;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 7) throw std::runtime_error("events CSV: expected 7 fields: " + line);
    Event e;
    e.time = parse_double(f[0]);
    const auto type = event_type_from_string(f[1]);
    if (!type) throw std::runtime_error("events CSV: unknown event " + f[1]);
    e.type = *type;
    e.vehicle_id = parse_int<VehicleId>(f[2]);
    e.kind = parse_kind(f[3]);
    e.lane = parse_int<int>(f[4]);
    e.long_pos = parse_double(f[5]);
    e.detail = f[6];
    events.push_back(std::move(e));
  }
  return events;
}

void write_trajectory_csv(std::ostream& out, std::span<const TrajectorySample> samples) {
  out << "time,vehicle_id,lane,long_pos,lat_pos,speed,accel\n";
  for (const auto& s : samples)
    out << format_double(s.time) << ',' << s.vehicle_id << ',' << s.lane << ','
        << format_double(s.long_pos) << ',' << format_double(s.lat_pos) << ',' << format_double(s.speed) << ','
        << format_double(s.accel) << '\n';
}

std::vector<TrajectorySample> read_trajectory_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "time,vehicle_id,lane,long_pos,lat_pos,speed,accel")
    throw std::runtime_error("trajectory CSV: unexpected header");
  std::vector<TrajectorySample> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 7) throw std::runtime_error("trajectory CSV: expected 7 fields: " + line);
    TrajectorySample t;
    t.time = parse_double(f[0]);
    t.vehicle_id = parse_int<VehicleId>(f[1]);
    t.lane = parse_int<int>(f[2]);
    t.long_pos = parse_double(f[3]);
    t.lat_pos = parse_double(f[4]);
    t.speed = parse_double(f[5]);
    t.accel = parse_double(f[6]);
    out.push_back(t);
  }
  return out;
}

SpaceTimeGrid space_time_grid(std::span<const TrajectorySample> samples, double bin_x, double bin_t,
                              double x_extent, double t_extent) {
  require(bin_x > 0.0 && bin_t > 0.0, "bins must be positive");
  require(x_extent >= 0.0 && t_extent >= 0.0, "extents must be non-negative");
  SpaceTimeGrid g;
  g.bin_x = bin_x;
  g.bin_t = bin_t;
  g.x_bins = std::max(1, static_cast<int>(std::ceil(x_extent / bin_x)));
  g.t_bins = std::max(1, static_cast<int>(std::ceil(t_extent / bin_t)));
  std::vector<double> sum(static_cast<std::size_t>(g.x_bins) * static_cast<std::size_t>(g.t_bins), 0.0);
  std::vector<long long> count(sum.size(), 0);
  for (const auto& s : samples) {
    const int t = std::clamp(static_cast<int>(std::floor(s.time / bin_t)), 0, g.t_bins - 1);
    const int x = std::clamp(static_cast<int>(std::floor(s.long_pos / bin_x)), 0, g.x_bins - 1);
    const auto i = static_cast<std::size_t>(t) * static_cast<std::size_t>(g.x_bins) + static_cast<std::size_t>(x);
    sum[i] += s.speed;
    ++count[i];
  }
  g.cells.resize(sum.size());
  for (std::size_t i = 0; i < sum.size(); ++i)
    if (count[i] > 0) g.cells[i] = sum[i] / static_cast<double>(count[i]);
  return g;
}

void write_spacetime_csv(std::ostream& out, const SpaceTimeGrid& grid) {
  out << "t_bin,x_bin,mean_speed\n";
  for (int t = 0; t < grid.t_bins; ++t)
    for (int x = 0; x < grid.x_bins; ++x) {
      out << format_double(t * grid.bin_t) << ',' << format_double(x * grid.bin_x) << ',';
      if (const auto& v = grid.at(t, x)) out << format_double(*v);
      out << '\n';
    }
}

double nearest_rank_quantile(std::vector<double> samples, double p) {
  require(!samples.empty(), "quantile of an empty sample");
  require(p > 0.0 && p <= 1.0, "quantile level must be in (0, 1]");
  std::sort(samples.begin(), samples.end());
  const auto rank = static_cast<std::size_t>(std::ceil(p * static_cast<double>(samples.size())));
  return samples[std::max<std::size_t>(rank, 1) - 1];
}

LatencyCdf inference_cdf(std::span<const double> samples_ms) {
  require(!samples_ms.empty(), "CDF needs at least one sample");
  std::vector<double> sorted(samples_ms.begin(), samples_ms.end());
  std::sort(sorted.begin(), sorted.end());
  LatencyCdf cdf;
  const double n = static_cast<double>(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) cdf.points.emplace_back(sorted[i], static_cast<double>(i + 1) / n);
  cdf.p50 = nearest_rank_quantile(sorted, 0.50);
  cdf.p90 = nearest_rank_quantile(sorted, 0.90);
  cdf.p99 = nearest_rank_quantile(sorted, 0.99);
  return cdf;
}

void write_cdf_csv(std::ostream& out, const LatencyCdf& cdf) {
  out << "ms,cum_frac\n";
  for (const auto& [v, f] : cdf.points) out << format_double(v) << ',' << format_double(f) << '\n';
}

}  // namespace palcas
