#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "palcas/config.hpp"
#include "palcas/error.hpp"
#include "palcas/experiment.hpp"
#include "palcas/metrics.hpp"

using namespace palcas;
namespace fs = std::filesystem;

namespace {

Event ev(double t, EventType type, VehicleId id, VehicleKind kind, int lane, std::string detail = {}) {
  return Event{t, type, id, kind, lane, 100.0 * t, std::move(detail)};
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("palcas_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(PALCAS_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("presets survive a JSON round trip") {
  for (auto p : {Preset::paper, Preset::desk, Preset::toy}) {
    const auto text = to_json(make_preset(p));
    CHECK(to_json(parse_config(text)) == text);
  }
  CHECK_THROWS_AS(preset_from_string("huge"), ConfigError);
}

TEST_CASE("config errors carry the offending line") {
  const std::string unknown = "{\n  \"learner\": {\n    \"bogus\": 1\n  }\n}\n";
  try {
    parse_config(unknown);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.line() == 3);
    CHECK(std::string(e.what()).find("bogus") != std::string::npos);
  }
  const std::string invalid = "{\n  \"federation\": {\"rounds\": 2},\n  \"learner\": {\n    \"gamma\": 1.5\n  }\n}\n";
  try {
    parse_config(invalid);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.line() == 3);  // whole-section checks point at the section
  }
  CHECK_THROWS_AS(parse_config("{\n  \"rounds\": \n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[1, 2]"), ConfigError);
  CHECK(parse_config("{}").rounds == ExperimentConfig{}.rounds);
}

TEST_CASE("PALCAS_SEED overrides the configured seed") {
  ExperimentConfig c;
  ::setenv("PALCAS_SEED", "4242", 1);
  apply_environment_overrides(c);
  CHECK(c.seed == 4242);
  ::setenv("PALCAS_SEED", "12x", 1);
  CHECK_THROWS_AS(apply_environment_overrides(c), ConfigError);
  ::unsetenv("PALCAS_SEED");
  apply_environment_overrides(c);
  CHECK(c.seed == 4242);
}

TEST_CASE("episode tallies follow the outcome rules") {
  const auto cav = VehicleKind::cav, chv = VehicleKind::chv;
  const std::vector<Event> events{
      ev(0.0, EventType::spawn, 1, cav, 2, "route=main>off2"),
      ev(0.0, EventType::spawn, 2, cav, 3, "route=main>off2"),
      ev(0.1, EventType::spawn, 3, cav, 0, "route=ramp1>off2"),
      ev(0.1, EventType::spawn, 4, chv, 1, "route=main>off2"),
      ev(0.2, EventType::spawn, 5, cav, 1, "route=main>end"),
      ev(0.2, EventType::spawn, 6, cav, 0, "route=ramp1>off2"),
      ev(1.0, EventType::merge, 3, cav, 1),
      ev(2.0, EventType::arrival, 1, cav, 1, "exit"),
      ev(2.0, EventType::missed_exit, 2, cav, 3, "lane=3"),
      ev(2.5, EventType::collision, 3, cav, 1, "with=4"),
      ev(2.5, EventType::collision, 4, chv, 1, "with=3"),
      ev(3.0, EventType::deadlock, 6, cav, 0),
      ev(4.0, EventType::arrival, 2, cav, 3, "end"),
  };
  const std::vector<TrajectorySample> traj{
      {0.0, 1, VehicleKind::cav, 2, 150.0, 4.8, 20.0, 1.0},
      {0.0, 4, VehicleKind::chv, 1, 300.0, 1.6, 30.0, -2.0},
      {0.0, 5, VehicleKind::cav, 1, 50.0, 1.6, 10.0, -3.0},  // warmup: no efficiency sample
  };
  const RoadNetwork net;
  const auto m = compute_metrics(events, traj, net);
  CHECK(m.spawned_cavs == 5);
  CHECK(m.collided_cavs == 1);
  CHECK(*m.collision_rate == doctest::Approx(20.0));
  CHECK(m.exit_successes == 1);
  CHECK(m.exit_failures == 2);
  CHECK(*m.destination_success_rate == doctest::Approx(100.0 / 3.0));
  CHECK(m.merge_successes == 1);
  CHECK(m.merge_failures == 1);
  CHECK(*m.merge_success_rate == doctest::Approx(50.0));
  CHECK(*m.efficiency == doctest::Approx(25.0));
  CHECK(*m.cav_mean_abs_accel == doctest::Approx(2.0));

  const auto empty = compute_metrics({}, {}, net);
  CHECK_FALSE(empty.collision_rate.has_value());
  CHECK_FALSE(empty.destination_success_rate.has_value());
  CHECK_FALSE(empty.efficiency.has_value());
}

TEST_CASE("summary uses the sample standard deviation and skips absent values") {
  EpisodeMetrics a, b, c;
  a.destination_success_rate = 50.0;
  b.destination_success_rate = 100.0;
  const std::vector<EpisodeMetrics> eps{a, b, c};
  const auto rows = summarize(eps);
  const auto it = std::find_if(rows.begin(), rows.end(),
                               [](const MetricRow& r) { return r.metric == "destination_success_rate"; });
  REQUIRE(it != rows.end());
  CHECK(it->n == 2);
  CHECK(*it->mean == doctest::Approx(75.0));
  CHECK(*it->stddev == doctest::Approx(std::sqrt(2.0 * 625.0)));
  const auto eff = std::find_if(rows.begin(), rows.end(), [](const MetricRow& r) { return r.metric == "efficiency"; });
  CHECK_FALSE(eff->mean.has_value());
  std::ostringstream csv;
  write_metrics_csv(csv, rows);
  CHECK(csv.str().find("efficiency,,,0\n") != std::string::npos);
}

TEST_CASE("event and trajectory CSVs round trip exactly") {
  const std::vector<Event> events{
      ev(0.1, EventType::spawn, 7, VehicleKind::cav, 0, "route=ramp1>off2"),
      ev(1.0 / 3.0, EventType::lane_change, 7, VehicleKind::cav, 1, "from=0;to=1"),
      ev(2.7, EventType::merge, 7, VehicleKind::cav, 1),
  };
  std::stringstream s;
  write_events_csv(s, events);
  CHECK(read_events_csv(s) == events);

  const std::vector<TrajectorySample> traj{{0.1, 3, VehicleKind::chv, 2, 123.456789012345, 4.8, 29.9, -0.1}};
  std::stringstream t;
  write_trajectory_csv(t, traj);
  const auto back = read_trajectory_csv(t);
  REQUIRE(back.size() == 1);
  CHECK(back[0].long_pos == traj[0].long_pos);
  CHECK(back[0].accel == traj[0].accel);

  std::stringstream bad("time,event\n");
  CHECK_THROWS(read_events_csv(bad));
  auto with_comma = events;
  with_comma[0].detail = "a,b";
  std::ostringstream sink;
  CHECK_THROWS_AS(write_events_csv(sink, with_comma), ContractError);
}

TEST_CASE("space-time grid averages speeds per cell") {
  const std::vector<TrajectorySample> traj{
      {0.5, 1, VehicleKind::cav, 1, 10.0, 0.0, 20.0, 0.0},
      {0.7, 2, VehicleKind::cav, 1, 40.0, 0.0, 30.0, 0.0},
      {1.5, 1, VehicleKind::cav, 1, 60.0, 0.0, 10.0, 0.0},
      {9.9, 1, VehicleKind::cav, 1, 500.0, 0.0, 5.0, 0.0},  // clamped into the last cell
  };
  const auto g = space_time_grid(traj, 50.0, 1.0, 100.0, 2.0);
  CHECK(g.t_bins == 2);
  CHECK(g.x_bins == 2);
  CHECK(*g.at(0, 0) == doctest::Approx(25.0));
  CHECK_FALSE(g.at(0, 1).has_value());
  CHECK_FALSE(g.at(1, 0).has_value());
  CHECK(*g.at(1, 1) == doctest::Approx(7.5));
}

TEST_CASE("nearest-rank quantiles") {
  std::vector<double> v{5, 1, 4, 2, 3, 6, 7, 8, 9, 10};
  CHECK(nearest_rank_quantile(v, 0.9) == 9.0);
  CHECK(nearest_rank_quantile(v, 0.5) == 5.0);
  CHECK(nearest_rank_quantile(v, 0.91) == 10.0);
  CHECK(nearest_rank_quantile(v, 1.0) == 10.0);
  CHECK(nearest_rank_quantile({3.0}, 0.01) == 3.0);
  CHECK_THROWS_AS(nearest_rank_quantile({}, 0.5), ContractError);
}

TEST_CASE("empirical CDF of exponential samples matches the distribution") {
  Rng rng(78);
  std::vector<double> xs(3000);
  for (auto& x : xs) x = -std::log(1.0 - rng.uniform());
  const auto cdf = inference_cdf(xs);
  CHECK(cdf.points.size() == 3000);
  CHECK(cdf.points.back().second == 1.0);
  for (std::size_t i = 1; i < cdf.points.size(); ++i) CHECK(cdf.points[i].first >= cdf.points[i - 1].first);
  CHECK(cdf.p50 == doctest::Approx(std::log(2.0)).epsilon(0.05));
  CHECK(cdf.p90 == doctest::Approx(std::log(10.0)).epsilon(0.05));
  CHECK(cdf.p99 == doctest::Approx(std::log(100.0)).epsilon(0.10));
  // Sup distance to the true CDF; 1.63 / sqrt(n) is the 1% Kolmogorov-Smirnov bound.
  double worst = 0.0;
  for (const auto& [x, f] : cdf.points) worst = std::max(worst, std::abs(f - (1.0 - std::exp(-x))));
  CHECK(worst < 1.63 / std::sqrt(3000.0));
}

TEST_CASE("format_double is shortest round trip") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(2.0) == "2");
  CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("command line exit codes") {
  const auto dir = scratch("cli");
  {
    std::ofstream bad(dir / "bad.json");
    bad << "{\n  \"federation\": {\"mode\": \"gossip\"}\n}\n";
  }
  CHECK(run_cli("train " + (dir / "bad.json").string() + " --out " + (dir / "run").string()) == 1);

  {
    std::ofstream good(dir / "toy.json");
    good << to_json(make_preset(Preset::toy));
  }
  LearnerConfig other;
  other.hidden = {3};
  write_checkpoint(dir / "wrong.bin", Learner(other, 1).export_weights());
  CHECK(run_cli("eval " + (dir / "toy.json").string() + " " + (dir / "wrong.bin").string() + " --out " +
                (dir / "eval").string()) == 2);
  CHECK(run_cli("eval " + (dir / "toy.json").string() + " " + (dir / "missing.bin").string()) == 3);
  CHECK(run_cli("export-config --preset desk") == 0);
  fs::remove_all(dir);
}
