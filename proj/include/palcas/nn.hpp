#pragma once

#include <Eigen/Core>
#include <cmath>
#include <string>
#include <vector>

#include "palcas/error.hpp"
#include "palcas/random.hpp"

namespace palcas::nn {

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Feed-forward network. Hidden blocks are Linear -> BatchNorm -> ReLU -> Dropout,
/// the last layer is plain Linear. Batches are stored one sample per column.
struct MlpConfig {
  int input = 1;
  std::vector<int> hidden;
  int output = 1;
  double dropout = 0.1;
  double bn_momentum = 0.9;  // weight of the old running statistic
  double bn_eps = 1e-5;
};

enum class Mode {
  eval,         // running statistics, no dropout
  train,        // batch statistics, updates running statistics, dropout
  train_frozen  // batch statistics and dropout, running statistics untouched
};

template <typename Scalar>
class Mlp {
 public:
  using M = Mat<Scalar>;

  Mlp() = default;

  Mlp(const MlpConfig& config, Rng& rng) : config_(config) {
    require(config.input > 0 && config.output > 0, "layer sizes must be positive");
    require(config.dropout >= 0.0 && config.dropout < 1.0, "dropout must be in [0, 1)");
    int fan_in = config.input;
    auto add_linear = [&](int out, const std::string& name) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
      M w(out, fan_in), b(out, 1);
      for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = static_cast<Scalar>(rng.uniform(-bound, bound));
      for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = static_cast<Scalar>(rng.uniform(-bound, bound));
      add_param(name + ".weight", std::move(w));
      add_param(name + ".bias", std::move(b));
      fan_in = out;
    };
    for (std::size_t i = 0; i < config.hidden.size(); ++i) {
      const int width = config.hidden[i];
      require(width > 0, "hidden width must be positive");
      add_linear(width, "fc" + std::to_string(i));
      add_param("bn" + std::to_string(i) + ".weight", M::Ones(width, 1));
      add_param("bn" + std::to_string(i) + ".bias", M::Zero(width, 1));
      buffers_.push_back(M::Zero(width, 1));
      buffer_names_.push_back("bn" + std::to_string(i) + ".running_mean");
      buffers_.push_back(M::Ones(width, 1));
      buffer_names_.push_back("bn" + std::to_string(i) + ".running_var");
    }
    add_linear(config.output, "out");
    zero_grad();
  }

  const MlpConfig& config() const { return config_; }
  int input_size() const { return config_.input; }
  int output_size() const { return config_.output; }

  std::vector<M>& params() { return params_; }
  const std::vector<M>& params() const { return params_; }
  std::vector<M>& grads() { return grads_; }
  const std::vector<M>& grads() const { return grads_; }
  std::vector<M>& buffers() { return buffers_; }
  const std::vector<M>& buffers() const { return buffers_; }
  const std::vector<std::string>& param_names() const { return param_names_; }
  const std::vector<std::string>& buffer_names() const { return buffer_names_; }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += static_cast<std::size_t>(p.size());
    return n;
  }

  void zero_grad() {
    grads_.resize(params_.size());
    for (std::size_t i = 0; i < params_.size(); ++i) grads_[i] = M::Zero(params_[i].rows(), params_[i].cols());
  }

  /// Inference without caching; always eval mode.
  M predict(const M& x) const {
    require(x.rows() == config_.input, "input width mismatch");
    M h = x;
    const std::size_t blocks = config_.hidden.size();
    for (std::size_t i = 0; i < blocks; ++i) {
      const auto& w = params_[4 * i];
      const auto& b = params_[4 * i + 1];
      const auto& gamma = params_[4 * i + 2];
      const auto& beta = params_[4 * i + 3];
      const auto& mean = buffers_[2 * i];
      const auto& var = buffers_[2 * i + 1];
      M z = (w * h).colwise() + b.col(0);
      const M scale = gamma.array() / (var.array() + static_cast<Scalar>(config_.bn_eps)).sqrt();
      const M shift = beta.array() - mean.array() * scale.array();
      z = (z.array().colwise() * scale.col(0).array()).colwise() + shift.col(0).array();
      h = z.cwiseMax(Scalar(0));
    }
    return (params_[4 * blocks] * h).colwise() + params_[4 * blocks + 1].col(0);
  }

  /// Forward pass that records what backward() needs.
  M forward(const M& x, Mode mode, Rng* rng = nullptr) {
    require(x.rows() == config_.input, "input width mismatch");
    const Eigen::Index batch = x.cols();
    const bool training = mode != Mode::eval;
    require(!training || batch > 1, "training mode needs a batch of at least two");
    require(!training || config_.dropout == 0.0 || rng != nullptr, "dropout needs a random source");
    const std::size_t blocks = config_.hidden.size();
    cache_.assign(blocks, {});
    mode_ = mode;
    M h = x;
    for (std::size_t i = 0; i < blocks; ++i) {
      auto& c = cache_[i];
      c.input = h;
      const auto& gamma = params_[4 * i + 2];
      const auto& beta = params_[4 * i + 3];
      M z = (params_[4 * i] * h).colwise() + params_[4 * i + 1].col(0);
      const auto eps = static_cast<Scalar>(config_.bn_eps);
      if (training) {
        const M mean = z.rowwise().mean();
        const M centered = z.colwise() - mean.col(0);
        const M var = centered.array().square().rowwise().mean();
        c.inv_std = (var.array() + eps).rsqrt();
        c.xhat = centered.array().colwise() * c.inv_std.col(0).array();
        if (mode == Mode::train) {
          const auto m = static_cast<Scalar>(config_.bn_momentum);
          const Scalar unbias = static_cast<Scalar>(batch) / static_cast<Scalar>(batch - 1);
          buffers_[2 * i] = m * buffers_[2 * i] + (Scalar(1) - m) * mean;
          buffers_[2 * i + 1] = m * buffers_[2 * i + 1] + (Scalar(1) - m) * unbias * var;
        }
      } else {
        c.inv_std = (buffers_[2 * i + 1].array() + eps).rsqrt();
        c.xhat = (z.colwise() - buffers_[2 * i].col(0)).array().colwise() * c.inv_std.col(0).array();
      }
      z = (c.xhat.array().colwise() * gamma.col(0).array()).colwise() + beta.col(0).array();
      c.active = (z.array() > Scalar(0)).template cast<Scalar>();
      h = z.cwiseMax(Scalar(0));
      if (training && config_.dropout > 0.0) {
        const Scalar keep = static_cast<Scalar>(1.0 - config_.dropout);
        c.dropout = M(h.rows(), h.cols());
        for (Eigen::Index k = 0; k < c.dropout.size(); ++k)
          c.dropout.data()[k] = rng->bernoulli(1.0 - config_.dropout) ? Scalar(1) / keep : Scalar(0);
        h.array() *= c.dropout.array();
      } else {
        c.dropout.resize(0, 0);
      }
    }
    last_hidden_ = h;
    return (params_[4 * blocks] * h).colwise() + params_[4 * blocks + 1].col(0);
  }

  /// Accumulates parameter gradients for the last forward() and returns the input gradient.
  /// With `param_grads` false only the input gradient is computed.
  M backward(const M& grad_out, bool param_grads = true) {
    const std::size_t blocks = config_.hidden.size();
    require(cache_.size() == blocks && grad_out.cols() == last_hidden_.cols(), "backward without forward");
    if (param_grads) {
      grads_[4 * blocks] += grad_out * last_hidden_.transpose();
      grads_[4 * blocks + 1] += grad_out.rowwise().sum();
    }
    M g = params_[4 * blocks].transpose() * grad_out;
    const bool training = mode_ != Mode::eval;
    for (std::size_t i = blocks; i-- > 0;) {
      auto& c = cache_[i];
      if (c.dropout.size() > 0) g.array() *= c.dropout.array();
      g.array() *= c.active.array();
      // g is now dL/d(bn output)
      if (param_grads) {
        grads_[4 * i + 2] += (g.array() * c.xhat.array()).rowwise().sum().matrix();
        grads_[4 * i + 3] += g.rowwise().sum();
      }
      M dxhat = g.array().colwise() * params_[4 * i + 2].col(0).array();
      M dz;
      if (training) {
        const auto n = static_cast<Scalar>(g.cols());
        const M sum_d = dxhat.rowwise().sum();
        const M sum_dx = (dxhat.array() * c.xhat.array()).rowwise().sum();
        dz = ((n * dxhat).colwise() - sum_d.col(0)).array() - c.xhat.array().colwise() * sum_dx.col(0).array();
        dz = dz.array().colwise() * (c.inv_std.col(0).array() / n);
      } else {
        dz = dxhat.array().colwise() * c.inv_std.col(0).array();
      }
      if (param_grads) {
        grads_[4 * i] += dz * c.input.transpose();
        grads_[4 * i + 1] += dz.rowwise().sum();
      }
      g = params_[4 * i].transpose() * dz;
    }
    return g;
  }

  template <typename Other>
  void copy_from(const Mlp<Other>& other) {
    require(other.params().size() == params_.size() && other.buffers().size() == buffers_.size(),
            "network shapes differ");
    for (std::size_t i = 0; i < params_.size(); ++i) params_[i] = other.params()[i].template cast<Scalar>();
    for (std::size_t i = 0; i < buffers_.size(); ++i) buffers_[i] = other.buffers()[i].template cast<Scalar>();
  }

  template <typename Other>
  friend class Mlp;

 private:
  void add_param(std::string name, M value) {
    param_names_.push_back(std::move(name));
    params_.push_back(std::move(value));
  }

  struct BlockCache {
    M input, xhat, inv_std, active, dropout;
  };

  MlpConfig config_;
  std::vector<M> params_, grads_, buffers_;
  std::vector<std::string> param_names_, buffer_names_;
  std::vector<BlockCache> cache_;
  M last_hidden_;
  Mode mode_ = Mode::eval;
};

struct AdamWConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-2;
};

/// Decoupled weight decay Adam over a fixed list of tensors.
template <typename Scalar>
class AdamW {
 public:
  using M = Mat<Scalar>;

  AdamW() = default;
  AdamW(const std::vector<M>& params, AdamWConfig config) : config_(config) {
    for (const auto& p : params) {
      m_.push_back(M::Zero(p.rows(), p.cols()));
      v_.push_back(M::Zero(p.rows(), p.cols()));
    }
  }

  void step(std::vector<M>& params, const std::vector<M>& grads) {
    require(params.size() == m_.size() && grads.size() == m_.size(), "optimizer state mismatch");
    ++t_;
    const Scalar lr = static_cast<Scalar>(config_.lr);
    const Scalar b1 = static_cast<Scalar>(config_.beta1), b2 = static_cast<Scalar>(config_.beta2);
    const Scalar c1 = Scalar(1) - static_cast<Scalar>(std::pow(config_.beta1, static_cast<double>(t_)));
    const Scalar c2 = Scalar(1) - static_cast<Scalar>(std::pow(config_.beta2, static_cast<double>(t_)));
    const Scalar eps = static_cast<Scalar>(config_.eps);
    const Scalar decay = Scalar(1) - lr * static_cast<Scalar>(config_.weight_decay);
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i] = b1 * m_[i] + (Scalar(1) - b1) * grads[i];
      v_[i] = b2 * v_[i] + (Scalar(1) - b2) * grads[i].cwiseProduct(grads[i]);
      params[i] *= decay;
      params[i].array() -= lr * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + eps);
    }
  }

  long long steps() const { return t_; }
  const AdamWConfig& config() const { return config_; }
  std::vector<M>& first_moments() { return m_; }
  std::vector<M>& second_moments() { return v_; }
  void set_steps(long long t) { t_ = t; }

 private:
  AdamWConfig config_;
  std::vector<M> m_, v_;
  long long t_ = 0;
};

/// Huber loss averaged over all elements; returns the loss and writes dL/dprediction.
template <typename Scalar>
Scalar huber(const Mat<Scalar>& prediction, const Mat<Scalar>& target, Mat<Scalar>& grad, Scalar delta = 1) {
  const Mat<Scalar> diff = prediction - target;
  const auto n = static_cast<Scalar>(diff.size());
  grad = diff.cwiseMax(-delta).cwiseMin(delta) / n;
  const auto a = diff.array().abs();
  return (a <= delta).select(Scalar(0.5) * a.square(), delta * (a - Scalar(0.5) * delta)).sum() / n;
}

}  // namespace palcas::nn
