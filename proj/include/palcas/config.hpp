#pragma once

#include <cstdint>
#include <string>

#include "palcas/environment.hpp"
#include "palcas/federation.hpp"
#include "palcas/pdqn.hpp"

namespace palcas {

struct ExperimentConfig {
  EnvConfig env;
  LearnerConfig learner;
  FederationConfig federation;
  int rounds = 40;
  int eval_episodes = 20;
  std::uint64_t seed = 1;
  bool record_wall_time = true;
  double spacetime_bin_x = 50.0;  // m
  double spacetime_bin_t = 10.0;  // s

  /// Throws ConfigError describing the first invalid field.
  void validate() const;
};

enum class Preset { paper, desk, toy };

ExperimentConfig make_preset(Preset preset);
Preset preset_from_string(const std::string& name);

/// Serialized form; keys mirror the struct fields, grouped by section.
std::string to_json(const ExperimentConfig& config);

/// Parses and validates. Unknown keys, wrong types, and invalid values throw
/// ConfigError carrying the offending line. Keys left out keep their defaults.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

/// Applies PALCAS_SEED from the environment when set.
void apply_environment_overrides(ExperimentConfig& config);

}  // namespace palcas
