#include "palcas/environment.hpp"

#include <optional>

#include "palcas/error.hpp"

namespace palcas {

std::vector<int> per_cluster_owners(int clusters) {
  std::vector<int> owner(static_cast<std::size_t>(clusters));
  for (int c = 0; c < clusters; ++c) owner[static_cast<std::size_t>(c)] = c;
  return owner;
}

std::vector<int> single_owner(int clusters) { return std::vector<int>(static_cast<std::size_t>(clusters), 0); }

Environment::Environment(const EnvConfig& config, std::vector<int> cluster_owner, std::uint64_t seed)
    : config_(config), network_(std::make_shared<RoadNetwork>(config.geometry)), owner_(std::move(cluster_owner)) {
  require(static_cast<int>(owner_.size()) == network_->cluster_count(), "one owner per cluster");
  for (int k : owner_) {
    require(k >= 0, "agent index must be non-negative");
    agents_ = std::max(agents_, k + 1);
  }
  config_.spawn.validate();
  config_.rewards.validate();
  config_.world.rss.validate();
  require(config_.episode_length > 0.0, "episode length must be positive");
  reset(seed);
}

void Environment::reset(std::uint64_t seed) {
  world_ = std::make_unique<World>(network_, config_.world, seed);
  views_.assign(static_cast<std::size_t>(agents_), {});
  trajectory_.clear();
  in_tick_ = false;
}

const std::vector<AgentView>& Environment::begin_tick() {
  require(!in_tick_, "begin_tick called twice");
  world_->spawn_step(config_.spawn);
  tick_scene_.emplace(world_->scene());
  const Scene& scene = *tick_scene_;
  const auto stats = scene.all_cluster_stats();
  for (auto& v : views_) {
    v.vehicles.clear();
    v.observations.clear();
  }
  for (const Vehicle& v : scene.vehicles()) {
    if (v.kind != VehicleKind::cav) continue;
    const auto cluster = network_->cluster_of(std::clamp(v.long_pos, 0.0, network_->mainline_length()));
    if (!cluster) continue;
    auto& view = views_[static_cast<std::size_t>(owner_[static_cast<std::size_t>(*cluster - 1)])];
    view.vehicles.push_back(v.id);
    view.observations.push_back(encode(scene, v, stats, config_.observe));
  }
  in_tick_ = true;
  return views_;
}

TickOutcome Environment::end_tick(const std::vector<std::vector<HybridAction>>& actions) {
  require(in_tick_, "end_tick without begin_tick");
  require(actions.size() == views_.size(), "one action list per agent");
  for (std::size_t k = 0; k < views_.size(); ++k)
    require(actions[k].size() == views_[k].vehicles.size(), "one action per observed vehicle");

  const Scene& before = *tick_scene_;
  std::map<VehicleId, HybridAction> chosen;
  for (std::size_t k = 0; k < views_.size(); ++k)
    for (std::size_t i = 0; i < views_[k].vehicles.size(); ++i) chosen[views_[k].vehicles[i]] = actions[k][i];
  for (const Vehicle& v : before.vehicles())
    if (!chosen.count(v.id)) chosen[v.id] = chv_policy(before, v, config_.world);
  for (const auto& [id, action] : chosen) world_->apply_action(id, action);

  TickOutcome out;
  out.report = world_->step();

  std::vector<Vehicle> with_removed;
  for (const auto& [id, v] : world_->vehicles()) with_removed.push_back(v);
  for (const auto& v : out.report.removed) with_removed.push_back(v);
  const Scene reward_scene(network_, std::move(with_removed), world_->time());
  const Scene after = world_->scene();
  const auto after_stats = after.all_cluster_stats();
  const reward::Context ctx(reward_scene, config_.rewards, config_.world.rss, config_.disable_priority_reward);

  out.transitions.resize(views_.size());
  for (std::size_t k = 0; k < views_.size(); ++k) {
    for (std::size_t i = 0; i < views_[k].vehicles.size(); ++i) {
      const VehicleId id = views_[k].vehicles[i];
      const Vehicle* now = reward_scene.find(id);
      const auto b = reward::vehicle_reward(ctx, *now);
      out.breakdowns.push_back(b);
      Transition t;
      t.state = views_[k].observations[i];
      t.action = actions[k][i].as_int();
      t.accel = actions[k][i].accel;
      t.reward = b.total;
      t.terminal = !world_->contains(id);
      t.next_state = t.terminal ? encode(reward_scene, *now, ctx.stats, config_.observe)
                                : encode(after, *after.find(id), after_stats, config_.observe);
      out.transitions[k].push_back(std::move(t));
    }
  }

  if (record_trajectory_)
    for (const auto& [id, v] : world_->vehicles())
      trajectory_.push_back({world_->time(), id, v.kind, v.lane, v.long_pos, v.lat_pos, v.speed, v.accel});

  tick_scene_.reset();
  in_tick_ = false;
  return out;
}

}  // namespace palcas
