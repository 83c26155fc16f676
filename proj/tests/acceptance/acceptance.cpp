// Acceptance runner: one PASS/FAIL line per criterion.
//   palcas_acceptance            fast criteria (1-5, 8-10)
//   palcas_acceptance 4 9        selected criteria
//   palcas_acceptance --all      everything, including the slow training comparisons

#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <sstream>
#include <string>

#include "suites.hpp"

using namespace palcas;
using namespace testing_support;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  const char* name;
  double limit_s;
  bool slow;
  std::function<Outcome()> run;
};

std::string fmt(double x, int digits = 3) {
  std::ostringstream s;
  s.precision(digits);
  s << x;
  return s.str();
}

fs::path work_dir(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("palcas_acceptance_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

const MetricRow& row(const std::vector<MetricRow>& rows, const std::string& name) {
  for (const auto& r : rows)
    if (r.metric == name) return r;
  throw std::runtime_error("missing metric " + name);
}

std::string mean_std(const MetricRow& r) {
  if (!r.mean) return "absent";
  return fmt(*r.mean, 4) + "+/-" + fmt(*r.stddev, 3);
}

Outcome formulas() {
  const auto report = run_formula_suite(1000, 20240601);
  bool ok = report.worst() <= 1e-12 && report.max_error.size() == 14;
  std::string detail = "ops=" + std::to_string(report.max_error.size()) + " worst=" + fmt(report.worst());
  for (const auto& a : formula_anchors()) {
    ok = ok && a.ok();
    detail += " " + a.name + "=" + fmt(a.got, 6);
  }
  return {ok, detail};
}

Outcome gradients() {
  const auto r = run_gradient_check(50, 7);
  const bool ok = r.settings == 50 && r.q_worst < 1e-4 && r.param_worst < 1e-4 && r.q_untouched;
  return {ok, "q=" + fmt(r.q_worst) + " param=" + fmt(r.param_worst) + (r.q_untouched ? "" : " q-net disturbed")};
}

Outcome fedavg() {
  const auto failures = run_fedavg_algebra(99);
  std::string detail = failures.empty() ? "idempotence, convexity, permutation, linearity, 1x0+3x4=3" : "";
  for (const auto& f : failures) detail += "failed: " + f + "; ";
  return {failures.empty(), detail};
}

Outcome determinism() {
  auto c = make_preset(Preset::desk);
  c.rounds = 1;
  c.record_wall_time = false;
  const auto a = work_dir("determinism_a"), b = work_dir("determinism_b");
  train(c, a);
  train(c, b);
  const bool rounds = slurp(a / "rounds.csv") == slurp(b / "rounds.csv");
  const bool ckpt = slurp(a / "checkpoint.bin") == slurp(b / "checkpoint.bin");
  const bool nonempty = fs::file_size(a / "checkpoint.bin") > 0 && fs::file_size(a / "rounds.csv") > 0;
  return {rounds && ckpt && nonempty,
          std::string("rounds.csv ") + (rounds ? "identical" : "differs") + ", checkpoint " +
              (ckpt ? "identical" : "differs") + " (" + std::to_string(fs::file_size(a / "checkpoint.bin")) +
              " bytes)"};
}

Outcome toy_learning() {
  auto c = make_preset(Preset::toy);
  c.eval_episodes = 20;
  const auto run = train(c, {});
  const auto trained = evaluate(c, checkpoint_policy(c, run.checkpoint), {});
  const auto random = evaluate(c, random_policy(Rng::mix(c.seed, 99)), {});
  const auto& t = row(trained.summary, "destination_success_rate");
  const auto& r = row(random.summary, "destination_success_rate");
  const bool ok = run.environment_steps <= 50000 && t.mean && r.mean && *t.mean >= 90.0 && *r.mean <= 40.0;
  return {ok, "steps=" + std::to_string(run.environment_steps) + " DSR trained=" + mean_std(t) +
                  " random=" + mean_std(r)};
}

ExperimentConfig comparison_config() {
  auto c = make_preset(Preset::desk);
  c.env.spawn.cav_penetration = 0.6;
  c.eval_episodes = 20;
  return c;
}

bool separated(const MetricRow& lower, const MetricRow& higher) {
  return lower.mean && higher.mean && *lower.mean + *lower.stddev < *higher.mean - *higher.stddev;
}

Outcome ablation() {
  const auto c = comparison_config();
  const auto r = ablate(c, work_dir("ablation"));
  const auto& cr_full = row(r.full.summary, "collision_rate");
  const auto& cr_abl = row(r.ablated.summary, "collision_rate");
  const auto& dsr_full = row(r.full.summary, "destination_success_rate");
  const auto& dsr_abl = row(r.ablated.summary, "destination_success_rate");
  const bool ok = separated(cr_full, cr_abl) && separated(dsr_abl, dsr_full);
  return {ok, "CR full=" + mean_std(cr_full) + " ablated=" + mean_std(cr_abl) + "; DSR full=" + mean_std(dsr_full) +
                  " ablated=" + mean_std(dsr_abl)};
}

Outcome federation_benefit() {
  auto fed = comparison_config();
  auto iso = fed;
  iso.federation.mode = FederationMode::isolated;
  const auto a = train(fed, work_dir("fedavg"));
  const auto b = train(iso, work_dir("isolated"));
  const auto ea = evaluate(fed, checkpoint_policy(fed, a.checkpoint), {});
  const auto eb = evaluate(iso, checkpoint_policy(iso, b.checkpoint), {});
  const auto& da = row(ea.summary, "destination_success_rate");
  const auto& db = row(eb.summary, "destination_success_rate");
  return {da.mean && db.mean && *da.mean >= *db.mean, "DSR fedavg=" + mean_std(da) + " isolated=" + mean_std(db)};
}

Outcome latency() {
  const auto c = make_preset(Preset::paper);
  const Trainer t(c.env, c.learner, c.federation, c.seed);
  const auto r = bench_inference(c, t.checkpoint(), 3000, 20);
  return {r.samples_ms.size() == 3000 && r.cdf.p90 < 100.0,
          "p50=" + fmt(r.cdf.p50) + " ms p90=" + fmt(r.cdf.p90) + " ms p99=" + fmt(r.cdf.p99) + " ms"};
}

Outcome invariants() {
  const auto r = run_invariant_suite(100, 314159);
  std::string detail = std::to_string(r.episodes) + " episodes, " + std::to_string(r.steps) + " steps";
  for (const auto& f : r.failures) detail += "; " + f;
  return {r.ok() && r.episodes == 100, detail};
}

Outcome observations() {
  const auto r = run_observation_contract(10000, 2718);
  const double hand = hand_built_observation_error();
  const bool ok = r.scenes == 10000 && r.out_of_range == 0 && r.non_finite == 0 && hand <= 1e-12 &&
                  observation_labels().size() == kObservationSize;
  return {ok, std::to_string(r.scenes) + " scenes, out of range " + std::to_string(r.out_of_range) +
                  ", non-finite " + std::to_string(r.non_finite) + ", hand-built max error " + fmt(hand)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {1, "formula oracles", 5, false, formulas},
      {2, "gradient check", 30, false, gradients},
      {3, "fedavg algebra", 5, false, fedavg},
      {4, "training determinism", 600, false, determinism},
      {5, "toy learning", 1800, false, toy_learning},
      {6, "ablation direction", 4 * 3600, true, ablation},
      {7, "federation benefit", 4 * 3600, true, federation_benefit},
      {8, "inference latency", 600, false, latency},
      {9, "simulator invariants", 300, false, invariants},
      {10, "observation contract", 60, false, observations},
  };

  std::vector<int> wanted;
  bool all = false;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--all") {
      all = true;
    } else {
      try {
        wanted.push_back(std::stoi(a));
      } catch (const std::exception&) {
        std::cerr << "usage: palcas_acceptance [--all] [criterion...]\n";
        return 2;
      }
    }
  }

  int failed = 0;
  for (const auto& c : criteria) {
    const bool selected = wanted.empty() ? (all || !c.slow) : std::count(wanted.begin(), wanted.end(), c.id) > 0;
    if (!selected) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < c.limit_s;
    const bool pass = o.pass && in_time;
    if (!pass) ++failed;
    std::cout << (pass ? "PASS" : "FAIL") << " criterion " << c.id << " (" << c.name << "): " << o.detail << " ["
              << fmt(secs, 4) << " s of " << fmt(c.limit_s, 5) << " s" << (in_time ? "" : ", over limit") << "]"
              << std::endl;
  }
  fs::remove_all(fs::temp_directory_path() / ("palcas_acceptance_" + std::to_string(::getpid())));
  return failed == 0 ? 0 : 1;
}
