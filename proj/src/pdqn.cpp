#include "palcas/pdqn.hpp"

#include <sstream>

#include "palcas/error.hpp"

namespace palcas {

void LearnerConfig::validate() const {
  require(!hidden.empty(), "learner needs at least one hidden layer");
  for (int h : hidden) require(h > 0, "hidden widths must be positive");
  require(dropout >= 0.0 && dropout < 1.0, "dropout must be in [0, 1)");
  require(bn_momentum >= 0.0 && bn_momentum < 1.0, "batch-norm momentum must be in [0, 1)");
  require(lr > 0.0 && weight_decay >= 0.0, "bad optimizer settings");
  require(gamma >= 0.0 && gamma <= 1.0, "discount must be in [0, 1]");
  require(huber_delta > 0.0, "huber delta must be positive");
  require(batch_size >= 2, "batch size must be at least 2");
  require(updates_per_step >= 1, "updates_per_step must be at least 1");
  require(replay_capacity >= batch_size, "replay capacity must hold one batch");
  require(target_update_every > 0, "target update period must be positive");
  require(epsilon_final >= 0.0 && epsilon_final <= epsilon_init && epsilon_init <= 1.0, "bad epsilon range");
  require(epsilon_decay > 0.0 && epsilon_decay <= 1.0, "epsilon decay must be in (0, 1]");
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  require(capacity > 0, "replay capacity must be positive");
}

void ReplayBuffer::push(Transition t) {
  if (!std::isfinite(t.reward)) throw NumericalError("non-finite reward pushed to replay");
  if (items_.size() < capacity_) {
    items_.push_back(std::move(t));
  } else {
    items_[next_] = std::move(t);
  }
  next_ = (next_ + 1) % capacity_;
}

std::vector<const Transition*> ReplayBuffer::sample(std::size_t n, Rng& rng) const {
  require(!items_.empty(), "cannot sample an empty replay buffer");
  std::vector<const Transition*> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(&items_[rng.below(items_.size())]);
  return out;
}

namespace {

nn::MlpConfig net_config(const LearnerConfig& c, int input, int output) {
  nn::MlpConfig m;
  m.input = input;
  m.hidden = c.hidden;
  m.output = output;
  m.dropout = c.dropout;
  m.bn_momentum = c.bn_momentum;
  return m;
}

Eigen::MatrixXf stack(std::span<const Observation> obs) {
  Eigen::MatrixXf m(kObservationSize, static_cast<Eigen::Index>(obs.size()));
  for (std::size_t i = 0; i < obs.size(); ++i) m.col(static_cast<Eigen::Index>(i)) = obs[i].cast<float>();
  return m;
}

template <typename Net>
void export_net(const Net& net, const std::string& prefix, ModelWeights& out) {
  auto add = [&](const std::string& name, const Eigen::MatrixXf& m) {
    Tensor t;
    t.name = prefix + name;
    if (m.cols() == 1) {
      t.shape = {static_cast<std::uint64_t>(m.rows())};
    } else {
      t.shape = {static_cast<std::uint64_t>(m.rows()), static_cast<std::uint64_t>(m.cols())};
    }
    t.data.reserve(static_cast<std::size_t>(m.size()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) t.data.push_back(static_cast<double>(m(r, c)));
    out.tensors.push_back(std::move(t));
  };
  for (std::size_t i = 0; i < net.params().size(); ++i) add(net.param_names()[i], net.params()[i]);
  for (std::size_t i = 0; i < net.buffers().size(); ++i) add(net.buffer_names()[i], net.buffers()[i]);
}

template <typename Net>
std::size_t import_net(Net& net, const ModelWeights& in, std::size_t index) {
  auto load = [&](Eigen::MatrixXf& m) {
    const Tensor& t = in.tensors[index++];
    std::size_t k = 0;
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = static_cast<float>(t.data[k++]);
  };
  for (auto& p : net.params()) load(p);
  for (auto& b : net.buffers()) load(b);
  return index;
}

}  // namespace

Learner::Learner(const LearnerConfig& config, std::uint64_t seed)
    : config_(config), replay_(config.replay_capacity), rng_(Rng::mix(seed, 1)) {
  config_.validate();
  schedule_ = {config.epsilon_init, config.epsilon_final, config.epsilon_decay};
  Rng init(Rng::mix(seed, 0));
  q_ = Net(net_config(config, kObservationSize + 1, kActionCount), init);
  param_ = Net(net_config(config, kObservationSize, 1), init);
  q_target_ = q_;
  param_target_ = param_;
  q_opt_ = nn::AdamW<Scalar>(q_.params(), {config.lr, 0.9, 0.999, 1e-8, config.weight_decay});
  param_opt_ = nn::AdamW<Scalar>(param_.params(), {config.lr, 0.9, 0.999, 1e-8, config.weight_decay});
}

std::string Learner::signature() const {
  std::ostringstream s;
  s << "pdqn/v1 obs=" << kObservationSize << " actions=" << kActionCount << " params=1 hidden=";
  for (std::size_t i = 0; i < config_.hidden.size(); ++i) s << (i ? "x" : "") << config_.hidden[i];
  return s.str();
}

void Learner::check_finite(const Eigen::MatrixXf& m, const char* what) const {
  if (!m.allFinite()) {
    std::ostringstream s;
    s << "non-finite " << what << " after " << gradient_steps_ << " gradient steps ("
      << m.rows() << "x" << m.cols() << ", first column:";
    for (Eigen::Index r = 0; r < m.rows(); ++r) s << ' ' << m(r, 0);
    s << ")";
    throw NumericalError(s.str());
  }
}

std::vector<double> Learner::parameters(std::span<const Observation> observations) const {
  if (observations.empty()) return {};
  const Eigen::MatrixXf z = param_.predict(stack(observations));
  check_finite(z, "parameter-network output");
  const Eigen::MatrixXf a = pdqn::squash<float>(z);
  std::vector<double> out(observations.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = std::clamp(static_cast<double>(a(0, static_cast<Eigen::Index>(i))), kAccelMin, kAccelMax);
  return out;
}

Eigen::MatrixXd Learner::q_values(std::span<const Observation> observations, std::span<const double> accel) const {
  require(observations.size() == accel.size(), "one acceleration per observation");
  if (observations.empty()) return Eigen::MatrixXd(kActionCount, 0);
  Eigen::MatrixXf a(1, static_cast<Eigen::Index>(accel.size()));
  for (std::size_t i = 0; i < accel.size(); ++i) a(0, static_cast<Eigen::Index>(i)) = static_cast<float>(accel[i]);
  const Eigen::MatrixXf q = q_.predict(pdqn::q_input<float>(stack(observations), a));
  check_finite(q, "Q-network output");
  return q.cast<double>();
}

Eigen::MatrixXd Learner::q_values(std::span<const Observation> observations) const {
  const auto accel = parameters(observations);
  return q_values(observations, accel);
}

std::vector<HybridAction> Learner::select_actions(std::span<const Observation> observations, double epsilon,
                                                  Rng& rng) const {
  const auto accel = parameters(observations);
  const Eigen::MatrixXd q = q_values(observations, accel);
  std::vector<HybridAction> out;
  out.reserve(observations.size());
  for (std::size_t i = 0; i < observations.size(); ++i) {
    double c = accel[i];
    int index;
    if (epsilon > 0.0 && rng.uniform() < epsilon) {
      index = static_cast<int>(rng.below(kActionCount));
      if (index == static_cast<int>(ActionIndex::accelerate)) c = rng.uniform(kAccelMin, kAccelMax);
    } else {
      index = pdqn::argmax(q.col(static_cast<Eigen::Index>(i)));
    }
    out.push_back(HybridAction::make(index, c));
  }
  return out;
}

HybridAction Learner::select_action(const Observation& observation, double epsilon, Rng& rng) const {
  return select_actions(std::span<const Observation>(&observation, 1), epsilon, rng).front();
}

TrainStats Learner::train_step() {
  require(ready(), "replay buffer holds fewer transitions than one batch");
  const auto batch = replay_.sample(config_.batch_size, rng_);
  return train_on(batch);
}

TrainStats Learner::train_on(std::span<const Transition* const> batch) {
  const auto n = static_cast<Eigen::Index>(batch.size());
  require(n >= 2, "training batch needs at least two transitions");
  Eigen::MatrixXf s(kObservationSize, n), s2(kObservationSize, n), c(1, n), r(1, n), done(1, n);
  std::vector<int> actions(batch.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const Transition& t = *batch[static_cast<std::size_t>(i)];
    s.col(i) = t.state.cast<float>();
    s2.col(i) = t.next_state.cast<float>();
    c(0, i) = static_cast<float>(t.accel);
    r(0, i) = static_cast<float>(t.reward);
    done(0, i) = t.terminal ? 1.0f : 0.0f;
    actions[static_cast<std::size_t>(i)] = t.action;
  }

  const Eigen::MatrixXf y = pdqn::td_targets<float>(q_target_, param_target_, s2, r, done, config_.gamma);
  check_finite(y, "TD target");

  TrainStats stats;
  q_.zero_grad();
  stats.q_loss = pdqn::q_loss_backward<float>(q_, s, c, actions, y, nn::Mode::train, &rng_, config_.huber_delta);
  if (!std::isfinite(stats.q_loss)) throw NumericalError("non-finite Q loss at gradient step " +
                                                         std::to_string(gradient_steps_));
  q_opt_.step(q_.params(), q_.grads());

  param_.zero_grad();
  stats.param_loss = pdqn::param_loss_backward<float>(param_, q_, s, nn::Mode::train, nn::Mode::train_frozen, &rng_);
  if (!std::isfinite(stats.param_loss))
    throw NumericalError("non-finite parameter loss at gradient step " + std::to_string(gradient_steps_));
  param_opt_.step(param_.params(), param_.grads());

  ++gradient_steps_;
  if (config_.target_clock == TargetClock::gradient_steps && gradient_steps_ % config_.target_update_every == 0)
    update_target();
  return stats;
}

void Learner::note_environment_step() {
  ++environment_steps_;
  if (config_.target_clock == TargetClock::environment_steps &&
      environment_steps_ % config_.target_update_every == 0)
    update_target();
}

void Learner::update_target() {
  q_target_.copy_from(q_);
  param_target_.copy_from(param_);
}

ModelWeights Learner::export_weights() const {
  ModelWeights w;
  w.signature = signature();
  export_net(q_, "q/", w);
  export_net(param_, "param/", w);
  return w;
}

void Learner::import_weights(const ModelWeights& weights) {
  check_compatible(export_weights(), weights);
  std::size_t index = import_net(q_, weights, 0);
  import_net(param_, weights, index);
}

}  // namespace palcas
