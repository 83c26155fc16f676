#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "palcas/environment.hpp"
#include "palcas/pdqn.hpp"
#include "palcas/weights.hpp"

namespace palcas {

enum class FederationMode { fedavg, isolated, centralized };

const char* to_string(FederationMode mode);
std::optional<FederationMode> federation_mode_from_string(const std::string& s);

struct FederationConfig {
  FederationMode mode = FederationMode::fedavg;
  long long local_steps = 2500;  // gradient steps per agent per round
  int max_attempts = 3;          // per round, including the first
  /// Abort a round that runs this many ticks per required gradient step without finishing.
  long long tick_budget_factor = 50;

  void validate() const;
};

struct Contribution {
  int agent_id = 0;
  ModelWeights weights;
  std::uint64_t samples = 0;
};

/// Sample-weighted elementwise mean of all tensors.
/// Throws ContractError when the total sample count is zero and SchemaError
/// naming the first agent whose layout differs from the lowest-id agent.
ModelWeights aggregate(std::vector<Contribution> contributions);

struct AgentRoundRecord {
  int round = 0;
  int agent_id = 0;
  std::uint64_t samples = 0;
  double mean_loss = 0.0;
  double epsilon = 0.0;
  double wall_ms = 0.0;
};

struct RoundReport {
  int round = 0;
  int attempts = 1;
  long long ticks = 0;
  std::vector<AgentRoundRecord> agents;
  std::uint64_t global_checksum = 0;         // 0 in isolated mode
  std::vector<std::uint64_t> agent_checksums;
};

/// Owns the learners and the shared environment; one call per federated round.
class Trainer {
 public:
  Trainer(const EnvConfig& env, const LearnerConfig& learner, const FederationConfig& federation,
          std::uint64_t seed);

  int agent_count() const { return static_cast<int>(learners_.size()); }
  Learner& learner(int k) { return *learners_[static_cast<std::size_t>(k)]; }
  const Learner& learner(int k) const { return *learners_[static_cast<std::size_t>(k)]; }
  const Environment& environment() const { return env_; }
  const FederationConfig& federation() const { return federation_; }
  int rounds_completed() const { return round_; }

  RoundReport run_round();

  /// Checkpoint contents: "global/..." tensors for shared models, "agentK/..." per learner otherwise.
  ModelWeights checkpoint() const;

  /// Total transitions each agent has collected over all rounds.
  const std::vector<std::uint64_t>& lifetime_samples() const { return lifetime_samples_; }

  /// Test hook: called before every gradient step; throwing simulates an agent failure.
  void set_fault_hook(std::function<void(int agent, long long step)> hook) { fault_hook_ = std::move(hook); }

  /// Record wall-clock time per agent (disable for byte-identical reruns).
  void set_record_wall_time(bool on) { record_wall_time_ = on; }

 private:
  RoundReport attempt_round(int attempt);
  void next_episode();

  EnvConfig env_config_;
  LearnerConfig learner_config_;
  FederationConfig federation_;
  std::uint64_t seed_;
  std::vector<std::unique_ptr<Learner>> learners_;
  std::vector<Rng> action_rngs_;
  Environment env_;
  std::uint64_t episode_ = 0;
  int round_ = 0;
  std::vector<std::uint64_t> lifetime_samples_;
  std::function<void(int, long long)> fault_hook_;
  bool record_wall_time_ = true;
};

/// Splits a trainer checkpoint into per-cluster learner weights.
/// Returns one entry per cluster; shared models repeat the same weights.
std::vector<ModelWeights> split_checkpoint(const ModelWeights& checkpoint, int clusters);

}  // namespace palcas
