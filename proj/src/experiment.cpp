#include "palcas/experiment.hpp"

#include <chrono>
#include <fstream>
#include <memory>

#include "palcas/error.hpp"

namespace palcas {

namespace fs = std::filesystem;

namespace {

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

}  // namespace

TrainResult train(const ExperimentConfig& config, const fs::path& out, const TrainOptions& options) {
  ExperimentConfig c = config;
  if (options.local_steps) c.federation.local_steps = *options.local_steps;
  c.validate();
  const int rounds = options.max_rounds.value_or(c.rounds);
  require(rounds >= 1, "at least one round");

  Trainer trainer(c.env, c.learner, c.federation, c.seed);
  trainer.set_record_wall_time(c.record_wall_time);

  std::ofstream rounds_csv;
  if (!out.empty()) {
    fs::create_directories(out);
    open_out(out / "config.json") << to_json(c);
    rounds_csv = open_out(out / "rounds.csv");
    rounds_csv << "round,agent_id,n_k,mean_loss,epsilon,wall_ms\n";
  }

  TrainResult result;
  for (int r = 0; r < rounds; ++r) {
    RoundReport report = trainer.run_round();
    result.environment_steps += report.ticks;
    if (!out.empty()) {
      for (const auto& a : report.agents)
        rounds_csv << a.round << ',' << a.agent_id << ',' << a.samples << ',' << format_double(a.mean_loss) << ','
                   << format_double(a.epsilon) << ',' << format_double(a.wall_ms) << '\n';
      rounds_csv.flush();
      write_checkpoint(out / "checkpoint.bin", trainer.checkpoint());
    }
    if (options.on_round) options.on_round(report);
    result.rounds.push_back(std::move(report));
  }
  result.checkpoint = trainer.checkpoint();
  return result;
}

Policy checkpoint_policy(const ExperimentConfig& config, const ModelWeights& checkpoint) {
  const int clusters = config.env.geometry.cluster_count;
  const auto parts = split_checkpoint(checkpoint, clusters);
  auto learners = std::make_shared<std::vector<Learner>>();
  for (int k = 0; k < clusters; ++k) {
    learners->emplace_back(config.learner, 0);
    learners->back().import_weights(parts[static_cast<std::size_t>(k)]);
  }
  auto rng = std::make_shared<Rng>(0);
  return [learners, rng](const std::vector<AgentView>& views) {
    std::vector<std::vector<HybridAction>> actions(views.size());
    for (std::size_t k = 0; k < views.size(); ++k)
      if (!views[k].observations.empty())
        actions[k] = (*learners)[k].select_actions(views[k].observations, 0.0, *rng);
    return actions;
  };
}

Policy random_policy(std::uint64_t seed) {
  auto rng = std::make_shared<Rng>(seed);
  return [rng](const std::vector<AgentView>& views) {
    std::vector<std::vector<HybridAction>> actions(views.size());
    for (std::size_t k = 0; k < views.size(); ++k)
      for (std::size_t i = 0; i < views[k].observations.size(); ++i) {
        const int q = static_cast<int>(rng->below(kActionCount));
        actions[k].push_back(HybridAction::make(q, rng->uniform(kAccelMin, kAccelMax)));
      }
    return actions;
  };
}

EvalResult evaluate(const ExperimentConfig& config, const Policy& policy, const fs::path& out,
                    const EvalOptions& options) {
  config.validate();
  const int episodes = options.episodes.value_or(config.eval_episodes);
  if (!out.empty()) fs::create_directories(out);
  std::ofstream obs_csv;
  if (options.dump_observations && !out.empty()) {
    obs_csv = open_out(out / "observations.csv");
    obs_csv << "time,agent_id,vehicle_id";
    for (const auto& label : observation_labels()) obs_csv << ',' << label;
    obs_csv << '\n';
  }

  EvalResult result;
  for (int e = 0; e < episodes; ++e) {
    Environment env(config.env, per_cluster_owners(config.env.geometry.cluster_count),
                    Rng::mix(config.seed, 5000 + static_cast<std::uint64_t>(e)));
    env.set_record_trajectory(true);
    while (!env.done()) {
      const auto& views = env.begin_tick();
      if (e == 0 && obs_csv.is_open())
        for (std::size_t k = 0; k < views.size(); ++k)
          for (std::size_t i = 0; i < views[k].vehicles.size(); ++i) {
            obs_csv << format_double(env.world().time()) << ',' << k + 1 << ',' << views[k].vehicles[i];
            for (int j = 0; j < kObservationSize; ++j) obs_csv << ',' << format_double(views[k].observations[i][j]);
            obs_csv << '\n';
          }
      env.end_tick(policy(views));
    }
    const auto& world = env.world();
    result.episodes.push_back(compute_metrics(world.events(), env.trajectory(), world.network()));
    if (e == 0 && !out.empty()) {
      auto events = open_out(out / "events.csv");
      write_events_csv(events, world.events());
      auto traj = open_out(out / "trajectory.csv");
      write_trajectory_csv(traj, env.trajectory());
      auto st = open_out(out / "spacetime.csv");
      write_spacetime_csv(st, space_time_grid(env.trajectory(), config.spacetime_bin_x, config.spacetime_bin_t,
                                              world.network().mainline_length(), config.env.episode_length));
    }
  }
  result.summary = summarize(result.episodes);
  if (!out.empty()) {
    auto m = open_out(out / "metrics.csv");
    write_metrics_csv(m, result.summary);
  }
  return result;
}

AblationResult ablate(const ExperimentConfig& config, const fs::path& out, const TrainOptions& options) {
  AblationResult result;
  ExperimentConfig full = config;
  full.env.disable_priority_reward = false;
  ExperimentConfig ablated = config;
  ablated.env.disable_priority_reward = true;

  const fs::path full_dir = out.empty() ? fs::path() : out / "full";
  const fs::path ablated_dir = out.empty() ? fs::path() : out / "ablated";
  const auto full_train = train(full, full_dir, options);
  result.full = evaluate(full, checkpoint_policy(full, full_train.checkpoint), full_dir);
  const auto ablated_train = train(ablated, ablated_dir, options);
  result.ablated = evaluate(ablated, checkpoint_policy(ablated, ablated_train.checkpoint), ablated_dir);

  if (!out.empty()) {
    auto csv = open_out(out / "ablation.csv");
    csv << "variant,metric,mean,std,n\n";
    auto rows = [&](const char* variant, const EvalResult& r) {
      for (const auto& row : r.summary) {
        csv << variant << ',' << row.metric << ',';
        if (row.mean) csv << format_double(*row.mean);
        csv << ',';
        if (row.stddev) csv << format_double(*row.stddev);
        csv << ',' << row.n << '\n';
      }
    };
    rows("full", result.full);
    rows("no_priority_reward", result.ablated);
  }
  return result;
}

BenchResult bench_inference(const ExperimentConfig& config, const ModelWeights& checkpoint, int samples, int cavs) {
  require(samples >= 1 && cavs >= 1, "bench needs at least one sample and one vehicle");
  auto network = std::make_shared<RoadNetwork>(config.env.geometry);
  World world(network, config.env.world, config.seed);
  const auto& zone = network->cluster(1);
  const int lanes = network->lane_count();
  const double spacing = std::max(10.0, (zone.length() - 20.0) / ((cavs + lanes - 1) / lanes));
  for (int i = 0; i < cavs; ++i) {
    Vehicle v;
    v.kind = VehicleKind::cav;
    v.lane = 1 + i % lanes;
    v.lat_pos = network->lane_center(v.lane);
    v.long_pos = std::min(zone.start + 10.0 + spacing * (i / lanes), zone.end - 1.0);
    v.speed = 0.8 * network->speed_limit();
    v.max_speed = network->speed_limit();
    world.add_vehicle(v);
  }

  Learner learner(config.learner, 0);
  learner.import_weights(split_checkpoint(checkpoint, config.env.geometry.cluster_count).front());
  Rng rng(0);

  BenchResult result;
  result.samples_ms.reserve(static_cast<std::size_t>(samples));
  std::vector<Observation> obs;
  for (int s = 0; s < samples; ++s) {
    const auto t0 = std::chrono::steady_clock::now();
    const Scene scene = world.scene();
    const auto stats = scene.all_cluster_stats();
    obs.clear();
    for (const Vehicle& v : scene.vehicles())
      if (v.kind == VehicleKind::cav) obs.push_back(encode(scene, v, stats, config.env.observe));
    const auto actions = learner.select_actions(obs, 0.0, rng);
    const auto t1 = std::chrono::steady_clock::now();
    if (actions.size() != obs.size()) throw std::logic_error("bench: action count mismatch");
    result.samples_ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  result.cdf = inference_cdf(result.samples_ms);
  return result;
}

}  // namespace palcas
