#include "palcas/federation.hpp"

#include <algorithm>
#include <chrono>

#include "palcas/error.hpp"

namespace palcas {

const char* to_string(FederationMode mode) {
  switch (mode) {
    case FederationMode::fedavg: return "fedavg";
    case FederationMode::isolated: return "isolated";
    case FederationMode::centralized: return "centralized";
  }
  return "?";
}

std::optional<FederationMode> federation_mode_from_string(const std::string& s) {
  for (auto m : {FederationMode::fedavg, FederationMode::isolated, FederationMode::centralized})
    if (s == to_string(m)) return m;
  return std::nullopt;
}

void FederationConfig::validate() const {
  require(local_steps > 0, "local_steps must be positive");
  require(max_attempts >= 1, "max_attempts must be at least 1");
  require(tick_budget_factor > 0, "tick_budget_factor must be positive");
}

ModelWeights aggregate(std::vector<Contribution> contributions) {
  require(!contributions.empty(), "aggregate needs at least one contribution");
  std::sort(contributions.begin(), contributions.end(),
            [](const Contribution& a, const Contribution& b) { return a.agent_id < b.agent_id; });
  const ModelWeights& ref = contributions.front().weights;
  std::uint64_t total = 0;
  for (const auto& c : contributions) {
    check_compatible(ref, c.weights, "agent " + std::to_string(c.agent_id));
    total += c.samples;
  }
  if (total == 0) throw ContractError("aggregate: total sample count is zero");

  std::vector<double> share;
  for (const auto& c : contributions) share.push_back(static_cast<double>(c.samples) / static_cast<double>(total));

  // Written as reference + weighted deviations, then clamped to the contributor
  // range: identical inputs come back bit-exact and rounding never leaves the hull.
  ModelWeights out = ref;
  for (std::size_t t = 0; t < out.tensors.size(); ++t) {
    auto& dst = out.tensors[t].data;
    for (std::size_t i = 0; i < dst.size(); ++i) {
      const double base = ref.tensors[t].data[i];
      double lo = base, hi = base, acc = 0.0;
      for (std::size_t k = 0; k < contributions.size(); ++k) {
        const double x = contributions[k].weights.tensors[t].data[i];
        lo = std::min(lo, x);
        hi = std::max(hi, x);
        acc += share[k] * (x - base);
      }
      dst[i] = std::clamp(base + acc, lo, hi);
    }
  }
  return out;
}

Trainer::Trainer(const EnvConfig& env, const LearnerConfig& learner, const FederationConfig& federation,
                 std::uint64_t seed)
    : env_config_(env),
      learner_config_(learner),
      federation_(federation),
      seed_(seed),
      env_(env,
           federation.mode == FederationMode::centralized ? single_owner(env.geometry.cluster_count)
                                                          : per_cluster_owners(env.geometry.cluster_count),
           Rng::mix(seed, 1000)) {
  federation_.validate();
  const int agents = env_.agent_count();
  for (int k = 0; k < agents; ++k) {
    learners_.push_back(std::make_unique<Learner>(learner, Rng::mix(seed, 10 + static_cast<std::uint64_t>(k))));
    action_rngs_.emplace_back(Rng::mix(seed, 100 + static_cast<std::uint64_t>(k)));
  }
  // Every topology starts from one common initialization.
  const ModelWeights init = learners_.front()->export_weights();
  for (auto& l : learners_) l->import_weights(init);
  lifetime_samples_.assign(static_cast<std::size_t>(agents), 0);
}

void Trainer::next_episode() {
  ++episode_;
  env_.reset(Rng::mix(seed_, 1000 + episode_));
}

RoundReport Trainer::run_round() {
  std::vector<ModelWeights> start;
  for (const auto& l : learners_) start.push_back(l->export_weights());
  for (int attempt = 1;; ++attempt) {
    try {
      RoundReport report = attempt_round(attempt);
      ++round_;
      return report;
    } catch (const NumericalError&) {
      if (attempt >= federation_.max_attempts) throw;
    } catch (const AgentFailure&) {
      if (attempt >= federation_.max_attempts) throw;
    }
    for (std::size_t k = 0; k < learners_.size(); ++k) learners_[k]->import_weights(start[k]);
  }
}

RoundReport Trainer::attempt_round(int attempt) {
  using Clock = std::chrono::steady_clock;
  const std::size_t agents = learners_.size();
  const long long steps = federation_.local_steps;
  RoundReport report;
  report.round = round_ + 1;
  report.attempts = attempt;

  std::vector<long long> done(agents, 0);
  std::vector<std::uint64_t> samples(agents, 0);
  std::vector<double> loss_sum(agents, 0.0);
  std::vector<double> wall_ms(agents, 0.0);
  const long long tick_limit =
      federation_.tick_budget_factor * steps + static_cast<long long>(learner_config_.batch_size) * 100;

  auto finished = [&] {
    return std::all_of(done.begin(), done.end(), [&](long long d) { return d >= steps; });
  };
  std::vector<std::vector<HybridAction>> actions(agents);
  while (!finished()) {
    if (++report.ticks > tick_limit)
      throw std::runtime_error("round " + std::to_string(report.round) + " exceeded its tick budget; " +
                               "some agent is not collecting transitions");
    const auto& views = env_.begin_tick();
    for (std::size_t k = 0; k < agents; ++k) {
      const auto t0 = Clock::now();
      actions[k] = views[k].observations.empty()
                       ? std::vector<HybridAction>{}
                       : learners_[k]->select_actions(views[k].observations, learners_[k]->epsilon(),
                                                      action_rngs_[k]);
      wall_ms[k] += std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
    }
    auto outcome = env_.end_tick(actions);
    for (std::size_t k = 0; k < agents; ++k) {
      const auto t0 = Clock::now();
      Learner& l = *learners_[k];
      for (auto& t : outcome.transitions[k]) l.replay().push(std::move(t));
      samples[k] += outcome.transitions[k].size();
      l.note_environment_step();
      for (int u = 0; u < learner_config_.updates_per_step && l.ready() && done[k] < steps; ++u) {
        if (fault_hook_) fault_hook_(static_cast<int>(k) + 1, done[k]);
        loss_sum[k] += l.train_step().q_loss;
        ++done[k];
      }
      wall_ms[k] += std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
    }
    if (env_.done()) next_episode();
  }

  if (federation_.mode != FederationMode::isolated) {
    std::vector<Contribution> contributions;
    for (std::size_t k = 0; k < agents; ++k)
      contributions.push_back({static_cast<int>(k) + 1, learners_[k]->export_weights(), samples[k]});
    // Learners hold single precision; the broadcast model is the aggregate at that precision.
    learners_.front()->import_weights(aggregate(std::move(contributions)));
    const ModelWeights global = learners_.front()->export_weights();
    report.global_checksum = checksum(global);
    for (auto& l : learners_) l->import_weights(global);
  }
  for (std::size_t k = 0; k < agents; ++k) {
    const std::uint64_t sum = checksum(learners_[k]->export_weights());
    report.agent_checksums.push_back(sum);
    if (federation_.mode != FederationMode::isolated && sum != report.global_checksum)
      throw std::logic_error("broadcast left agent " + std::to_string(k + 1) + " out of sync");
    lifetime_samples_[k] += samples[k];
    AgentRoundRecord r;
    r.round = report.round;
    r.agent_id = static_cast<int>(k) + 1;
    r.samples = samples[k];
    r.mean_loss = loss_sum[k] / static_cast<double>(steps);
    r.epsilon = learners_[k]->epsilon();
    r.wall_ms = record_wall_time_ ? wall_ms[k] : 0.0;
    report.agents.push_back(r);
  }
  return report;
}

ModelWeights Trainer::checkpoint() const {
  ModelWeights out;
  out.signature = learners_.front()->signature();
  auto append = [&](const ModelWeights& w, const std::string& prefix) {
    for (auto t : w.tensors) {
      t.name = prefix + t.name;
      out.tensors.push_back(std::move(t));
    }
  };
  if (federation_.mode == FederationMode::isolated) {
    for (std::size_t k = 0; k < learners_.size(); ++k)
      append(learners_[k]->export_weights(), "agent" + std::to_string(k + 1) + "/");
  } else {
    append(learners_.front()->export_weights(), "global/");
  }
  return out;
}

std::vector<ModelWeights> split_checkpoint(const ModelWeights& checkpoint, int clusters) {
  std::vector<std::string> prefixes;
  std::vector<ModelWeights> parts;
  for (const auto& t : checkpoint.tensors) {
    const auto slash = t.name.find('/');
    if (slash == std::string::npos) throw SchemaError("checkpoint tensor without owner prefix: " + t.name);
    const std::string prefix = t.name.substr(0, slash);
    auto it = std::find(prefixes.begin(), prefixes.end(), prefix);
    if (it == prefixes.end()) {
      prefixes.push_back(prefix);
      parts.push_back({checkpoint.signature, {}});
      it = prefixes.end() - 1;
    }
    Tensor copy = t;
    copy.name = t.name.substr(slash + 1);
    parts[static_cast<std::size_t>(it - prefixes.begin())].tensors.push_back(std::move(copy));
  }
  if (prefixes.size() == 1 && prefixes.front() == "global")
    return std::vector<ModelWeights>(static_cast<std::size_t>(clusters), parts.front());
  if (static_cast<int>(prefixes.size()) != clusters)
    throw SchemaError("checkpoint holds " + std::to_string(prefixes.size()) + " agents but the road has " +
                      std::to_string(clusters) + " clusters");
  for (int k = 0; k < clusters; ++k)
    if (prefixes[static_cast<std::size_t>(k)] != "agent" + std::to_string(k + 1))
      throw SchemaError("unexpected checkpoint owner " + prefixes[static_cast<std::size_t>(k)]);
  return parts;
}

}  // namespace palcas
