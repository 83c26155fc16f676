#include "palcas/config.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <json.hpp>
#include <optional>
#include <map>
#include <set>
#include <sstream>

#include "palcas/error.hpp"

namespace palcas {

using Json = nlohmann::ordered_json;

namespace {

const char* to_string(TargetClock c) {
  return c == TargetClock::gradient_steps ? "gradient_steps" : "environment_steps";
}

// Calls v(section, key, field) for every configurable field, in file order.
template <typename V>
void visit(V& v, ExperimentConfig& c) {
  auto& g = c.env.geometry;
  v("geometry", "mainline_length", g.mainline_length);
  v("geometry", "lane_count", g.lane_count);
  v("geometry", "lane_width", g.lane_width);
  v("geometry", "cluster_count", g.cluster_count);
  v("geometry", "warmup_length", g.warmup_length);
  v("geometry", "speed_limit", g.speed_limit);
  v("geometry", "accel_lane_length", g.accel_lane_length);
  v("geometry", "on_ramp_offset", g.on_ramp_offset);
  v("geometry", "off_ramp_offset", g.off_ramp_offset);

  auto& s = c.env.spawn;
  v("spawn", "mainline_flow", s.mainline_flow);
  v("spawn", "ramp_flow", s.ramp_flow);
  v("spawn", "cav_penetration", s.cav_penetration);
  v("spawn", "p_fast", s.p_fast);
  v("spawn", "slow_speed_factor", s.slow_speed_factor);
  v("spawn", "ramp_speed_factor", s.ramp_speed_factor);
  v("spawn", "exit_only", s.exit_only);

  auto& w = c.env.world;
  v("world", "step_size", w.step_size);
  v("world", "lane_change_duration", w.lane_change_duration);
  v("world", "vehicle_length", w.vehicle_length);
  v("world", "vehicle_width", w.vehicle_width);
  v("world", "deadlock_speed", w.deadlock_speed);
  v("world", "deadlock_window", w.deadlock_window);
  v("world", "deadlock_time", w.deadlock_time);

  auto& d = c.env.world.driver;
  v("driver", "time_gap", d.time_gap);
  v("driver", "max_accel", d.max_accel);
  v("driver", "comfort_decel", d.comfort_decel);
  v("driver", "min_gap", d.min_gap);
  v("driver", "accel_exponent", d.accel_exponent);
  v("driver", "politeness", d.politeness);
  v("driver", "change_threshold", d.change_threshold);
  v("driver", "safe_decel", d.safe_decel);
  v("driver", "exit_bias_distance", d.exit_bias_distance);
  v("driver", "lane_change_cooldown", d.lane_change_cooldown);

  auto& r = c.env.world.rss;
  v("rss", "reaction_time", r.reaction_time);
  v("rss", "accel_max", r.accel_max);
  v("rss", "brake_min", r.brake_min);
  v("rss", "brake_max", r.brake_max);
  v("rss", "lateral_clearance", r.lateral_clearance);
  v("rss", "lateral_brake", r.lateral_brake);
  v("rss", "lateral_accel_max", r.lateral_accel_max);
  v("rss", "ttc_threshold", r.ttc_threshold);
  v("rss", "sigma_ttc", r.sigma_ttc);

  auto& rw = c.env.rewards;
  v("rewards", "efficiency", rw.efficiency);
  v("rewards", "safety", rw.safety);
  v("rewards", "comfort", rw.comfort);
  v("rewards", "lane_change", rw.lane_change);
  v("rewards", "deadlock", rw.deadlock);
  v("rewards", "cluster_share", rw.cluster_share);
  v("rewards", "ego_share", rw.ego_share);
  v("rewards", "comfort_threshold", rw.comfort_threshold);
  v("rewards", "nominal_lane_change_time", rw.nominal_lane_change_time);
  v("rewards", "exit_distance_threshold", rw.exit_distance_threshold);
  v("rewards", "exit_speed_threshold", rw.exit_speed_threshold);
  v("rewards", "deadlock_scale", rw.deadlock_scale);
  v("rewards", "epsilon", rw.epsilon);
  v("rewards", "proximity_scale", rw.proximity_scale);

  auto& o = c.env.observe;
  v("observe", "sensing_range", o.sensing_range);
  v("observe", "jam_density", o.jam_density);
  v("observe", "accel_scale", o.accel_scale);

  auto& l = c.learner;
  v("learner", "hidden", l.hidden);
  v("learner", "dropout", l.dropout);
  v("learner", "bn_momentum", l.bn_momentum);
  v("learner", "lr", l.lr);
  v("learner", "weight_decay", l.weight_decay);
  v("learner", "gamma", l.gamma);
  v("learner", "huber_delta", l.huber_delta);
  v("learner", "batch_size", l.batch_size);
  v("learner", "updates_per_step", l.updates_per_step);
  v("learner", "replay_capacity", l.replay_capacity);
  v("learner", "target_update_every", l.target_update_every);
  v("learner", "target_clock", l.target_clock);
  v("learner", "epsilon_init", l.epsilon_init);
  v("learner", "epsilon_final", l.epsilon_final);
  v("learner", "epsilon_decay", l.epsilon_decay);

  auto& f = c.federation;
  v("federation", "mode", f.mode);
  v("federation", "local_steps", f.local_steps);
  v("federation", "max_attempts", f.max_attempts);
  v("federation", "tick_budget_factor", f.tick_budget_factor);
  v("federation", "rounds", c.rounds);

  v("experiment", "seed", c.seed);
  v("experiment", "episode_length", c.env.episode_length);
  v("experiment", "eval_episodes", c.eval_episodes);
  v("experiment", "disable_priority_reward", c.env.disable_priority_reward);
  v("experiment", "record_wall_time", c.record_wall_time);
  v("experiment", "spacetime_bin_x", c.spacetime_bin_x);
  v("experiment", "spacetime_bin_t", c.spacetime_bin_t);
}

struct Writer {
  Json root = Json::object();
  template <typename T>
  void operator()(const char* section, const char* key, const T& value) {
    root[section][key] = value;
  }
  void operator()(const char* section, const char* key, const FederationMode& m) {
    root[section][key] = palcas::to_string(m);
  }
  void operator()(const char* section, const char* key, const TargetClock& c) {
    root[section][key] = to_string(c);
  }
};

// 1-based line of `"key"` inside `"section"`, or of the section when key is empty.
int line_of(const std::string& text, const std::string& section, const std::string& key = {}) {
  auto pos = text.find("\"" + section + "\"");
  if (pos == std::string::npos) return 0;
  if (!key.empty()) {
    const auto k = text.find("\"" + key + "\"", pos);
    if (k == std::string::npos) return 0;
    pos = k;
  }
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(pos), '\n'));
}

struct Reader {
  const Json& root;
  const std::string& text;
  std::map<std::string, std::set<std::string>> known;

  [[noreturn]] void fail(const char* section, const char* key, const std::string& what) const {
    throw ConfigError(std::string(section) + "." + key + ": " + what, line_of(text, section, key));
  }

  const Json* find(const char* section, const char* key) {
    known[section].insert(key);
    auto s = root.find(section);
    if (s == root.end() || !s->is_object()) return nullptr;
    auto k = s->find(key);
    return k == s->end() ? nullptr : &*k;
  }

  void operator()(const char* section, const char* key, double& out) {
    if (const Json* j = find(section, key)) {
      if (!j->is_number()) fail(section, key, "expected a number");
      out = j->get<double>();
    }
  }
  void operator()(const char* section, const char* key, bool& out) {
    if (const Json* j = find(section, key)) {
      if (!j->is_boolean()) fail(section, key, "expected true or false");
      out = j->get<bool>();
    }
  }
  template <typename I>
    requires std::is_integral_v<I>
  void operator()(const char* section, const char* key, I& out) {
    if (const Json* j = find(section, key)) {
      if (!j->is_number_integer()) fail(section, key, "expected an integer");
      if (std::is_unsigned_v<I> && j->is_number_integer() && !j->is_number_unsigned() && j->get<long long>() < 0)
        fail(section, key, "expected a non-negative integer");
      out = j->get<I>();
    }
  }
  void operator()(const char* section, const char* key, std::vector<int>& out) {
    if (const Json* j = find(section, key)) {
      if (!j->is_array()) fail(section, key, "expected an array of integers");
      std::vector<int> v;
      for (const auto& e : *j) {
        if (!e.is_number_integer()) fail(section, key, "expected an array of integers");
        v.push_back(e.get<int>());
      }
      out = v;
    }
  }
  void operator()(const char* section, const char* key, FederationMode& out) {
    if (const Json* j = find(section, key)) {
      const auto m = j->is_string() ? federation_mode_from_string(j->get<std::string>()) : std::nullopt;
      if (!m) fail(section, key, "expected one of \"fedavg\", \"isolated\", \"centralized\"");
      out = *m;
    }
  }
  void operator()(const char* section, const char* key, TargetClock& out) {
    if (const Json* j = find(section, key)) {
      const std::string s = j->is_string() ? j->get<std::string>() : "";
      if (s == "gradient_steps") {
        out = TargetClock::gradient_steps;
      } else if (s == "environment_steps") {
        out = TargetClock::environment_steps;
      } else {
        fail(section, key, "expected \"gradient_steps\" or \"environment_steps\"");
      }
    }
  }

  void reject_unknown() const {
    for (const auto& [section, body] : root.items()) {
      auto it = known.find(section);
      if (it == known.end()) throw ConfigError("unknown section \"" + section + "\"", line_of(text, section));
      if (!body.is_object()) throw ConfigError("section \"" + section + "\" must be an object", line_of(text, section));
      for (const auto& [key, value] : body.items())
        if (!it->second.count(key))
          throw ConfigError("unknown key \"" + section + "." + key + "\"", line_of(text, section, key));
    }
  }
};

struct Issue {
  std::string section, key, what;
};

std::optional<Issue> find_issue(const ExperimentConfig& c) {
  auto guarded = [](const char* section, auto&& fn) -> std::optional<Issue> {
    try {
      fn();
    } catch (const ContractError& e) {
      return Issue{section, "", e.what()};
    }
    return std::nullopt;
  };
  if (auto i = guarded("geometry", [&] { RoadNetwork n(c.env.geometry); })) return i;
  if (auto i = guarded("spawn", [&] { c.env.spawn.validate(); })) return i;
  if (auto i = guarded("rss", [&] { c.env.world.rss.validate(); })) return i;
  if (auto i = guarded("rewards", [&] { c.env.rewards.validate(); })) return i;
  if (auto i = guarded("learner", [&] { c.learner.validate(); })) return i;
  if (auto i = guarded("federation", [&] { c.federation.validate(); })) return i;

  const auto& w = c.env.world;
  if (!(w.step_size > 0.0)) return Issue{"world", "step_size", "must be positive"};
  if (!(w.lane_change_duration > 0.0)) return Issue{"world", "lane_change_duration", "must be positive"};
  if (!(w.vehicle_length > 0.0)) return Issue{"world", "vehicle_length", "must be positive"};
  if (!(w.vehicle_width > 0.0 && w.vehicle_width < c.env.geometry.lane_width))
    return Issue{"world", "vehicle_width", "must be positive and narrower than a lane"};
  if (!(w.deadlock_time > 0.0)) return Issue{"world", "deadlock_time", "must be positive"};
  const auto& o = c.env.observe;
  if (!(o.sensing_range > 0.0)) return Issue{"observe", "sensing_range", "must be positive"};
  if (!(o.jam_density > 0.0)) return Issue{"observe", "jam_density", "must be positive"};
  if (!(o.accel_scale > 0.0)) return Issue{"observe", "accel_scale", "must be positive"};
  if (c.rounds < 1) return Issue{"federation", "rounds", "must be at least 1"};
  if (c.eval_episodes < 1) return Issue{"experiment", "eval_episodes", "must be at least 1"};
  if (!(c.env.episode_length > 0.0)) return Issue{"experiment", "episode_length", "must be positive"};
  if (!(c.spacetime_bin_x > 0.0)) return Issue{"experiment", "spacetime_bin_x", "must be positive"};
  if (!(c.spacetime_bin_t > 0.0)) return Issue{"experiment", "spacetime_bin_t", "must be positive"};
  return std::nullopt;
}

std::string describe(const Issue& i) {
  return i.key.empty() ? i.section + ": " + i.what : i.section + "." + i.key + ": " + i.what;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (auto issue = find_issue(*this)) throw ConfigError(describe(*issue));
}

ExperimentConfig make_preset(Preset preset) {
  ExperimentConfig c;
  switch (preset) {
    case Preset::paper:
      break;
    case Preset::desk:
      c.env.geometry.mainline_length = 1200.0;
      c.env.geometry.cluster_count = 2;
      c.env.spawn.mainline_flow = 800.0;
      c.env.spawn.ramp_flow = 150.0;
      c.env.spawn.cav_penetration = 0.6;
      c.env.episode_length = 200.0;
      c.rounds = 8;
      break;
    case Preset::toy:
      c.env.geometry.mainline_length = 400.0;
      c.env.geometry.lane_count = 3;
      c.env.geometry.cluster_count = 1;
      c.env.geometry.warmup_length = 10.0;
      c.env.geometry.off_ramp_offset = 100.0;
      c.env.spawn.mainline_flow = 150.0;
      c.env.spawn.ramp_flow = 0.0;
      c.env.spawn.cav_penetration = 1.0;
      c.env.spawn.exit_only = true;
      c.env.episode_length = 120.0;
      c.learner.hidden = {64, 64};
      c.learner.batch_size = 256;
      c.learner.replay_capacity = 50000;
      c.learner.target_update_every = 500;
      c.learner.epsilon_decay = 0.99984;
      c.federation.local_steps = 5000;
      c.rounds = 9;
      break;
  }
  return c;
}

Preset preset_from_string(const std::string& name) {
  if (name == "paper") return Preset::paper;
  if (name == "desk") return Preset::desk;
  if (name == "toy") return Preset::toy;
  throw ConfigError("unknown preset \"" + name + "\" (expected paper, desk, or toy)");
}

std::string to_json(const ExperimentConfig& config) {
  Writer w;
  visit(w, const_cast<ExperimentConfig&>(config));
  return w.root.dump(2) + "\n";
}

ExperimentConfig parse_config(const std::string& text) {
  Json root;
  try {
    root = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const auto upto = std::min<std::size_t>(e.byte, text.size());
    const int line = 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n'));
    throw ConfigError(std::string("malformed JSON: ") + e.what(), line);
  }
  if (!root.is_object()) throw ConfigError("config must be a JSON object", 1);
  ExperimentConfig c;
  Reader r{root, text, {}};
  try {
    visit(r, c);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad value: ") + e.what());
  }
  r.reject_unknown();
  if (auto issue = find_issue(c)) throw ConfigError(describe(*issue), line_of(text, issue->section, issue->key));
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

void apply_environment_overrides(ExperimentConfig& config) {
  if (const char* s = std::getenv("PALCAS_SEED")) {
    char* end = nullptr;
    errno = 0;
    const unsigned long long v = std::strtoull(s, &end, 10);
    if (errno != 0 || end == s || *end != '\0') throw ConfigError(std::string("PALCAS_SEED is not an integer: ") + s);
    config.seed = v;
  }
}

}  // namespace palcas
