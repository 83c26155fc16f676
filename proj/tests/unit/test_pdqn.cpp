#include <doctest.h>

#include <array>
#include <cmath>

#include "palcas/error.hpp"
#include "palcas/pdqn.hpp"

using namespace palcas;

namespace {

LearnerConfig tiny_config() {
  LearnerConfig c;
  c.hidden = {4};
  c.batch_size = 2;
  c.replay_capacity = 16;
  c.target_update_every = 15000;
  return c;
}

Observation constant_obs(double x) { return Observation::Constant(x); }

Transition transition(double reward, bool terminal = false) {
  Transition t;
  t.state = constant_obs(0.1 * reward);
  t.next_state = constant_obs(-0.1 * reward);
  t.reward = reward;
  t.action = std::isfinite(reward) ? static_cast<int>(reward) % kActionCount : 0;
  t.accel = 0.5;
  t.terminal = terminal;
  return t;
}

bool same(const Learner::Net& a, const Learner::Net& b) {
  for (std::size_t i = 0; i < a.params().size(); ++i)
    if (a.params()[i] != b.params()[i]) return false;
  return true;
}

}  // namespace

TEST_CASE("argmax breaks ties toward the lower index") {
  Eigen::Vector4d q(1.0, 3.0, 3.0, 2.0);
  CHECK(pdqn::argmax(q) == 1);
  CHECK(pdqn::argmax(Eigen::Vector4d::Constant(0.5)) == 0);
  CHECK(pdqn::argmax(Eigen::Vector4d(-1.0, -2.0, -0.5, -0.5)) == 2);
}

TEST_CASE("full exploration draws the four actions uniformly") {
  Learner learner(tiny_config(), 3);
  Rng rng(99);
  std::array<int, kActionCount> counts{};
  const Observation o = constant_obs(0.2);
  bool accel_in_range = true;
  for (int i = 0; i < 10000; ++i) {
    const auto a = learner.select_action(o, 1.0, rng);
    ++counts[static_cast<std::size_t>(a.as_int())];
    if (a.accel < kAccelMin || a.accel > kAccelMax) accel_in_range = false;
  }
  double chi2 = 0.0;
  for (int c : counts) chi2 += (c - 2500.0) * (c - 2500.0) / 2500.0;
  CHECK(chi2 < 11.345);
  CHECK(accel_in_range);
}

TEST_CASE("greedy choice follows the Q-values") {
  Learner learner(tiny_config(), 5);
  Rng rng(1);
  const std::vector<Observation> obs{constant_obs(0.3), constant_obs(-0.7)};
  const auto q = learner.q_values(obs);
  const auto actions = learner.select_actions(obs, 0.0, rng);
  const auto accel = learner.parameters(obs);
  for (std::size_t i = 0; i < obs.size(); ++i) {
    CHECK(actions[i].as_int() == pdqn::argmax(q.col(static_cast<Eigen::Index>(i))));
    CHECK(actions[i].accel == doctest::Approx(accel[i]));
  }
}

TEST_CASE("squash maps onto the acceleration range") {
  Eigen::MatrixXd z(1, 3);
  z << -50.0, 0.0, 50.0;
  const auto a = pdqn::squash<double>(z);
  CHECK(a(0, 0) == doctest::Approx(kAccelMin));
  CHECK(a(0, 1) == doctest::Approx(0.5 * (kAccelMin + kAccelMax)));
  CHECK(a(0, 2) == doctest::Approx(kAccelMax));
}

TEST_CASE("terminal transitions do not bootstrap") {
  Rng rng(4);
  nn::MlpConfig qc{kObservationSize + 1, {3}, kActionCount, 0.0};
  nn::MlpConfig pc{kObservationSize, {3}, 1, 0.0};
  const nn::Mlp<double> q(qc, rng), p(pc, rng);
  Eigen::MatrixXd s2 = Eigen::MatrixXd::Constant(kObservationSize, 2, 0.1);
  Eigen::MatrixXd r(1, 2), done(1, 2);
  r << 1.0, 1.0;
  done << 1.0, 0.0;
  const auto y = pdqn::td_targets<double>(q, p, s2, r, done, 0.9);
  CHECK(y(0, 0) == 1.0);
  const auto best = q.predict(pdqn::q_input<double>(s2, pdqn::squash<double>(p.predict(s2)))).col(1).maxCoeff();
  CHECK(y(0, 1) == doctest::Approx(1.0 + 0.9 * best));
}

TEST_CASE("target networks sync every 15000 gradient steps") {
  Learner learner(tiny_config(), 7);
  for (int i = 0; i < 4; ++i) learner.replay().push(transition(i));
  for (int i = 0; i < 14999; ++i) learner.train_step();
  CHECK(learner.gradient_steps() == 14999);
  CHECK_FALSE(same(learner.q_net(), learner.q_target()));
  learner.train_step();
  CHECK(same(learner.q_net(), learner.q_target()));
  CHECK(same(learner.param_net(), learner.param_target()));
}

TEST_CASE("environment-step target clock") {
  auto c = tiny_config();
  c.target_clock = TargetClock::environment_steps;
  c.target_update_every = 3;
  Learner learner(c, 8);
  for (int i = 0; i < 4; ++i) learner.replay().push(transition(i));
  learner.train_step();
  learner.note_environment_step();
  learner.note_environment_step();
  CHECK_FALSE(same(learner.q_net(), learner.q_target()));
  learner.note_environment_step();
  CHECK(same(learner.q_net(), learner.q_target()));
  CHECK(learner.environment_steps() == 3);
}

TEST_CASE("exploration floor") {
  const ExplorationSchedule s;
  CHECK(s.steps_to_floor() == 260800);
  CHECK(s.at(260799) > 0.02);
  CHECK(s.at(260800) == 0.02);
  CHECK(s.at(0) == 1.0);
  CHECK(s.at(1000) == doctest::Approx(std::pow(0.999985, 1000.0)));
}

TEST_CASE("weights round trip through export and import") {
  Learner a(tiny_config(), 1), b(tiny_config(), 2);
  for (int i = 0; i < 4; ++i) a.replay().push(transition(i));
  for (int i = 0; i < 5; ++i) a.train_step();
  const auto w = a.export_weights();
  b.import_weights(w);
  CHECK(b.export_weights() == w);
  const std::vector<Observation> obs{constant_obs(0.4)};
  CHECK(a.q_values(obs) == b.q_values(obs));

  auto truncated = w;
  truncated.tensors.pop_back();
  CHECK_THROWS_AS(b.import_weights(truncated), SchemaError);
  auto c = tiny_config();
  c.hidden = {5};
  Learner other(c, 1);
  CHECK_THROWS_AS(b.import_weights(other.export_weights()), SchemaError);
}

TEST_CASE("serialized size follows the layout") {
  const Learner learner(tiny_config(), 1);
  const auto w = learner.export_weights();
  // Per tensor: name length + name + rank + 8 bytes per dim + 8 bytes per value.
  std::uint64_t want = 10 + 4 + 4 + w.signature.size() + 4;
  std::uint64_t values = 0;
  for (const auto& t : w.tensors) {
    want += 4 + t.name.size() + 4 + 8 * t.shape.size();
    std::uint64_t n = 1;
    for (auto d : t.shape) n *= d;
    values += n;
  }
  want += 8 * values;
  // Q net 46-4-4 and parameter net 45-4-1, batch-norm weights and statistics included.
  CHECK(values == (46 * 4 + 4 + 4 * 4 + 4 * 4 + 4) + (45 * 4 + 4 + 4 * 4 + 4 * 1 + 1));
  CHECK(serialized_size(w) == want);
  CHECK(serialize(w).size() == want);
  CHECK(deserialize(serialize(w)) == w);
}

TEST_CASE("replay buffer is a ring and rejects non-finite rewards") {
  ReplayBuffer buf(3);
  for (int i = 0; i < 5; ++i) buf.push(transition(i));
  CHECK(buf.size() == 3);
  CHECK(buf[0].reward == 3.0);
  CHECK(buf[1].reward == 4.0);
  CHECK(buf[2].reward == 2.0);
  CHECK_THROWS_AS(buf.push(transition(std::nan(""))), NumericalError);
  Rng rng(1);
  const auto s = buf.sample(100, rng);
  CHECK(s.size() == 100);
  CHECK_THROWS_AS(ReplayBuffer(0), ContractError);
}

TEST_CASE("learner configuration validation") {
  auto c = tiny_config();
  c.updates_per_step = 0;
  CHECK_THROWS_AS(c.validate(), ContractError);
  c = tiny_config();
  c.replay_capacity = 1;
  CHECK_THROWS_AS(c.validate(), ContractError);
  c = tiny_config();
  c.epsilon_final = 2.0;
  CHECK_THROWS_AS(c.validate(), ContractError);
  Learner l(tiny_config(), 1);
  CHECK_FALSE(l.ready());
  CHECK_THROWS_AS(l.train_step(), ContractError);
}

TEST_CASE("training is reproducible from the seed") {
  Learner a(tiny_config(), 11), b(tiny_config(), 11);
  for (int i = 0; i < 8; ++i) {
    a.replay().push(transition(i, i % 3 == 0));
    b.replay().push(transition(i, i % 3 == 0));
  }
  for (int i = 0; i < 20; ++i) {
    const auto sa = a.train_step();
    const auto sb = b.train_step();
    CHECK(sa.q_loss == sb.q_loss);
  }
  CHECK(a.export_weights() == b.export_weights());
}
