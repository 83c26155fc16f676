#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "palcas/error.hpp"
#include "palcas/experiment.hpp"

namespace fs = std::filesystem;
using namespace palcas;

namespace {

ExperimentConfig load(const std::string& path) {
  ExperimentConfig c = load_config(path);
  apply_environment_overrides(c);
  return c;
}

void print_summary(const std::vector<MetricRow>& rows) {
  for (const auto& r : rows) {
    std::cout << "  " << r.metric << ": ";
    if (r.mean)
      std::cout << format_double(*r.mean) << " +/- " << format_double(*r.stddev) << " (n=" << r.n << ")\n";
    else
      std::cout << "absent\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Federated lane-change control for connected automated vehicles"};
  app.require_subcommand(1);

  std::string config_path, checkpoint_path, out_dir, preset = "paper";
  int max_rounds = 0, samples = 3000, cavs = 20;
  long long local_steps = 0;
  bool dump_observations = false;

  auto* train_cmd = app.add_subcommand("train", "Run federated training");
  train_cmd->add_option("config", config_path, "Config file (JSON)")->required();
  train_cmd->add_option("--out", out_dir, "Output directory")->default_val("run");
  train_cmd->add_option("--max-rounds", max_rounds, "Override the number of rounds");
  train_cmd->add_option("--local-steps", local_steps, "Override gradient steps per round");

  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint with the greedy policy");
  eval_cmd->add_option("config", config_path, "Config file (JSON)")->required();
  eval_cmd->add_option("checkpoint", checkpoint_path, "Checkpoint written by train")->required();
  eval_cmd->add_option("--out", out_dir, "Output directory")->default_val("eval");
  eval_cmd->add_flag("--dump-observations", dump_observations, "Write observations.csv for the first episode");

  auto* ablate_cmd = app.add_subcommand("ablate", "Train and evaluate with and without the priority reward");
  ablate_cmd->add_option("config", config_path, "Config file (JSON)")->required();
  ablate_cmd->add_option("--out", out_dir, "Output directory")->default_val("ablation");
  ablate_cmd->add_option("--max-rounds", max_rounds, "Override the number of rounds");
  ablate_cmd->add_option("--local-steps", local_steps, "Override gradient steps per round");

  auto* bench_cmd = app.add_subcommand("bench-inference", "Time per-decision-round inference");
  bench_cmd->add_option("checkpoint", checkpoint_path, "Checkpoint written by train")->required();
  bench_cmd->add_option("--config", config_path, "Config matching the checkpoint (default: paper preset)");
  bench_cmd->add_option("--out", out_dir, "Output directory")->default_val(".");
  bench_cmd->add_option("--samples", samples, "Number of timed decision rounds")->default_val(3000);
  bench_cmd->add_option("--cavs", cavs, "CAVs in the benchmark cluster")->default_val(20);

  auto* export_cmd = app.add_subcommand("export-config", "Print a complete config with defaults");
  export_cmd->add_option("--preset", preset, "paper, desk, or toy")->default_val("paper");

  CLI11_PARSE(app, argc, argv);

  try {
    TrainOptions topts;
    if (max_rounds > 0) topts.max_rounds = max_rounds;
    if (local_steps > 0) topts.local_steps = local_steps;
    topts.on_round = [](const RoundReport& r) {
      std::cerr << "round " << r.round << ": ticks=" << r.ticks;
      for (const auto& a : r.agents)
        std::cerr << " | agent " << a.agent_id << " n_k=" << a.samples << " loss=" << a.mean_loss
                  << " eps=" << a.epsilon;
      std::cerr << '\n';
    };

    if (*train_cmd) {
      const auto c = load(config_path);
      train(c, out_dir, topts);
      std::cout << "wrote " << (fs::path(out_dir) / "checkpoint.bin").string() << '\n';
    } else if (*eval_cmd) {
      const auto c = load(config_path);
      const auto ckpt = read_checkpoint(checkpoint_path);
      EvalOptions eopts;
      eopts.dump_observations = dump_observations;
      const auto result = evaluate(c, checkpoint_policy(c, ckpt), out_dir, eopts);
      print_summary(result.summary);
    } else if (*ablate_cmd) {
      const auto c = load(config_path);
      const auto result = ablate(c, out_dir, topts);
      std::cout << "full reward:\n";
      print_summary(result.full.summary);
      std::cout << "without priority reward:\n";
      print_summary(result.ablated.summary);
    } else if (*bench_cmd) {
      ExperimentConfig c = config_path.empty() ? make_preset(Preset::paper) : load(config_path);
      const auto ckpt = read_checkpoint(checkpoint_path);
      const auto result = bench_inference(c, ckpt, samples, cavs);
      fs::create_directories(out_dir);
      std::ofstream csv(fs::path(out_dir) / "inference_cdf.csv");
      write_cdf_csv(csv, result.cdf);
      std::cout << "p50=" << result.cdf.p50 << " ms  p90=" << result.cdf.p90 << " ms  p99=" << result.cdf.p99
                << " ms\n";
    } else if (*export_cmd) {
      std::cout << to_json(make_preset(preset_from_string(preset)));
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const SchemaError& e) {
    std::cerr << "schema error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
