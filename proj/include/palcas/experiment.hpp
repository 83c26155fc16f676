#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "palcas/config.hpp"
#include "palcas/federation.hpp"
#include "palcas/metrics.hpp"

namespace palcas {

struct TrainOptions {
  std::optional<int> max_rounds;
  std::optional<long long> local_steps;
  std::function<void(const RoundReport&)> on_round;
};

struct TrainResult {
  std::vector<RoundReport> rounds;
  ModelWeights checkpoint;
  long long environment_steps = 0;  // ticks of the shared world
};

/// Runs federated training. When `out` is non-empty writes rounds.csv,
/// checkpoint.bin (rewritten after every round) and config.json there.
TrainResult train(const ExperimentConfig& config, const std::filesystem::path& out, const TrainOptions& options = {});

/// Chooses actions for every agent's observations at one tick.
using Policy = std::function<std::vector<std::vector<HybridAction>>(const std::vector<AgentView>&)>;

/// Greedy policy from a trainer checkpoint; throws SchemaError when the
/// checkpoint does not fit `config`'s learner architecture or road.
Policy checkpoint_policy(const ExperimentConfig& config, const ModelWeights& checkpoint);

/// Uniform over the four actions with a uniform acceleration.
Policy random_policy(std::uint64_t seed);

struct EvalOptions {
  bool dump_observations = false;
  std::optional<int> episodes;
};

struct EvalResult {
  std::vector<EpisodeMetrics> episodes;
  std::vector<MetricRow> summary;
};

/// Runs the evaluation episodes with per-cluster ownership. Writes
/// metrics.csv plus events/trajectory/spacetime CSVs of the first episode
/// when `out` is non-empty.
EvalResult evaluate(const ExperimentConfig& config, const Policy& policy, const std::filesystem::path& out,
                    const EvalOptions& options = {});

struct AblationResult {
  EvalResult full, ablated;
};

/// Trains and evaluates the full reward and the variant without the
/// lane-change priority term, from the same seed and budget.
AblationResult ablate(const ExperimentConfig& config, const std::filesystem::path& out,
                      const TrainOptions& options = {});

struct BenchResult {
  std::vector<double> samples_ms;
  LatencyCdf cdf;
};

/// Times decision rounds (observation encoding plus one batched forward pass)
/// for `cavs` CAVs inside cluster 1.
BenchResult bench_inference(const ExperimentConfig& config, const ModelWeights& checkpoint, int samples = 3000,
                            int cavs = 20);

}  // namespace palcas
