#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "palcas/action.hpp"
#include "palcas/nn.hpp"
#include "palcas/observe.hpp"
#include "palcas/weights.hpp"

namespace palcas {

enum class TargetClock { gradient_steps, environment_steps };

struct LearnerConfig {
  std::vector<int> hidden{256, 512, 256};
  double dropout = 0.1;
  double bn_momentum = 0.9;
  double lr = 1e-3;
  double weight_decay = 1e-2;
  double gamma = 0.995;
  double huber_delta = 1.0;
  std::size_t batch_size = 256;
  int updates_per_step = 1;  // gradient steps per environment step once the buffer holds a batch
  std::size_t replay_capacity = 100000;
  long long target_update_every = 15000;
  TargetClock target_clock = TargetClock::gradient_steps;
  double epsilon_init = 1.0;
  double epsilon_final = 0.02;
  double epsilon_decay = 0.999985;

  void validate() const;
};

/// epsilon_t = max(final, init * decay^t).
struct ExplorationSchedule {
  double init = 1.0;
  double final_value = 0.02;
  double decay = 0.999985;

  double at(long long step) const {
    return std::max(final_value, init * std::pow(decay, static_cast<double>(step)));
  }
  /// First step at which the floor is reached.
  long long steps_to_floor() const {
    return static_cast<long long>(std::ceil(std::log(final_value / init) / std::log(decay)));
  }
};

struct Transition {
  Observation state;
  int action = 3;
  double accel = 0.0;
  double reward = 0.0;
  Observation next_state;
  bool terminal = false;
};

/// Fixed-capacity ring buffer with uniform sampling with replacement.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);
  void push(Transition t);
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  const Transition& operator[](std::size_t i) const { return items_[i]; }
  std::vector<const Transition*> sample(std::size_t n, Rng& rng) const;

 private:
  std::size_t capacity_;
  std::size_t next_ = 0;
  std::vector<Transition> items_;
};

namespace pdqn {

inline constexpr double kAccelCenter = 0.5 * (kAccelMax + kAccelMin);
inline constexpr double kAccelHalfRange = 0.5 * (kAccelMax - kAccelMin);
/// Scale applied to the acceleration parameter where it enters the Q-network.
inline constexpr double kAccelInputScale = 4.5;

template <typename S>
using Mat = nn::Mat<S>;

/// Bounded parameter transform: raw output -> acceleration in [a_min, a_max].
template <typename S>
Mat<S> squash(const Mat<S>& z) {
  return (z.array().tanh() * static_cast<S>(kAccelHalfRange) + static_cast<S>(kAccelCenter)).matrix();
}

/// Q-network input: observation rows followed by one scaled acceleration row.
template <typename S>
Mat<S> q_input(const Mat<S>& states, const Mat<S>& accel) {
  Mat<S> x(states.rows() + 1, states.cols());
  x.topRows(states.rows()) = states;
  x.bottomRows(1) = accel / static_cast<S>(kAccelInputScale);
  return x;
}

/// r + gamma * max_q Q'(s', q, mu'(s')) for non-terminal transitions.
template <typename S>
Mat<S> td_targets(const nn::Mlp<S>& q_target, const nn::Mlp<S>& param_target, const Mat<S>& next_states,
                  const Mat<S>& rewards, const Mat<S>& terminal, double gamma) {
  const Mat<S> accel = squash<S>(param_target.predict(next_states));
  const Mat<S> q = q_target.predict(q_input<S>(next_states, accel));
  const Mat<S> best = q.colwise().maxCoeff();
  return rewards.array() + static_cast<S>(gamma) * (S(1) - terminal.array()) * best.array();
}

/// Huber TD loss on the taken actions; accumulates gradients into `q`.
template <typename S>
S q_loss_backward(nn::Mlp<S>& q, const Mat<S>& states, const Mat<S>& accel, std::span<const int> actions,
                  const Mat<S>& targets, nn::Mode mode, Rng* rng, double delta = 1.0) {
  const Mat<S> out = q.forward(q_input<S>(states, accel), mode, rng);
  Mat<S> taken(1, out.cols());
  for (Eigen::Index i = 0; i < out.cols(); ++i) taken(0, i) = out(actions[static_cast<std::size_t>(i)], i);
  Mat<S> g;
  const S loss = nn::huber<S>(taken, targets, g, static_cast<S>(delta));
  Mat<S> grad_out = Mat<S>::Zero(out.rows(), out.cols());
  for (Eigen::Index i = 0; i < out.cols(); ++i) grad_out(actions[static_cast<std::size_t>(i)], i) = g(0, i);
  q.backward(grad_out);
  return loss;
}

/// -mean_batch sum_q Q(s, q, mu(s)); accumulates gradients into `param` only.
/// `q` gradients and running statistics are not touched.
template <typename S>
S param_loss_backward(nn::Mlp<S>& param, nn::Mlp<S>& q, const Mat<S>& states, nn::Mode param_mode,
                      nn::Mode q_mode, Rng* rng) {
  const Mat<S> z = param.forward(states, param_mode, rng);
  const Mat<S> accel = squash<S>(z);
  const Mat<S> out = q.forward(q_input<S>(states, accel), q_mode, rng);
  const auto batch = static_cast<S>(out.cols());
  const S loss = -out.sum() / batch;
  const Mat<S> dx = q.backward(Mat<S>::Constant(out.rows(), out.cols(), S(-1) / batch), false);
  const Mat<S> t = z.array().tanh();
  const Mat<S> dz = dx.bottomRows(1).array() / static_cast<S>(kAccelInputScale) *
                    static_cast<S>(kAccelHalfRange) * (S(1) - t.array().square());
  param.backward(dz);
  return loss;
}

/// Lowest index among the maxima.
template <typename Derived>
int argmax(const Eigen::DenseBase<Derived>& values) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(values.size()); ++i)
    if (values(i) > values(best)) best = i;
  return best;
}

}  // namespace pdqn

struct TrainStats {
  double q_loss = 0.0;
  double param_loss = 0.0;
};

/// One agent's PDQN learner: online and target networks, optimizers, replay.
class Learner {
 public:
  using Scalar = float;
  using Net = nn::Mlp<Scalar>;

  Learner(const LearnerConfig& config, std::uint64_t seed);

  const LearnerConfig& config() const { return config_; }
  std::string signature() const;

  /// Greedy or exploratory choice for each observation; one batched forward pass.
  std::vector<HybridAction> select_actions(std::span<const Observation> observations, double epsilon,
                                           Rng& rng) const;
  HybridAction select_action(const Observation& observation, double epsilon, Rng& rng) const;

  /// Q-values (4 x N) evaluated at the parameter network's accelerations.
  Eigen::MatrixXd q_values(std::span<const Observation> observations) const;
  Eigen::MatrixXd q_values(std::span<const Observation> observations, std::span<const double> accel) const;
  std::vector<double> parameters(std::span<const Observation> observations) const;

  ReplayBuffer& replay() { return replay_; }
  const ReplayBuffer& replay() const { return replay_; }
  bool ready() const { return replay_.size() >= config_.batch_size; }

  /// One gradient step on a uniformly sampled batch. Requires ready().
  TrainStats train_step();
  TrainStats train_on(std::span<const Transition* const> batch);

  /// Advances the exploration clock (and the target clock when configured so).
  void note_environment_step();
  double epsilon() const { return schedule_.at(environment_steps_); }
  long long environment_steps() const { return environment_steps_; }
  long long gradient_steps() const { return gradient_steps_; }

  void update_target();

  /// Online networks, including batch-norm running statistics.
  ModelWeights export_weights() const;
  void import_weights(const ModelWeights& weights);

  const Net& q_net() const { return q_; }
  const Net& param_net() const { return param_; }
  const Net& q_target() const { return q_target_; }
  const Net& param_target() const { return param_target_; }

 private:
  void check_finite(const Eigen::MatrixXf& m, const char* what) const;

  LearnerConfig config_;
  ExplorationSchedule schedule_;
  Net q_, param_, q_target_, param_target_;
  nn::AdamW<Scalar> q_opt_, param_opt_;
  ReplayBuffer replay_;
  Rng rng_;
  long long gradient_steps_ = 0;
  long long environment_steps_ = 0;
};

}  // namespace palcas
