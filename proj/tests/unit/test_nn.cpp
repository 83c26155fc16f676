#include <doctest.h>

#include "../support/suites.hpp"
#include "palcas/nn.hpp"

using namespace palcas;
using MatD = nn::Mat<double>;

namespace {

nn::Mlp<double> small_net(double dropout = 0.0, std::uint64_t seed = 1) {
  Rng rng(seed);
  nn::MlpConfig c;
  c.input = 3;
  c.hidden = {5};
  c.output = 2;
  c.dropout = dropout;
  return nn::Mlp<double>(c, rng);
}

MatD batch(int cols, std::uint64_t seed) {
  Rng rng(seed);
  MatD x(3, cols);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform(-1.0, 1.0);
  return x;
}

}  // namespace

TEST_CASE("analytic gradients agree with finite differences for both networks") {
  const auto r = testing_support::run_gradient_check(50, 2024);
  CHECK(r.settings == 50);
  CHECK(r.q_worst < 1e-4);
  CHECK(r.param_worst < 1e-4);
  CHECK(r.q_untouched);
}

TEST_CASE("batch-norm modes treat running statistics differently") {
  auto net = small_net();
  const MatD x = batch(8, 3);
  const auto before = net.buffers();

  net.forward(x, nn::Mode::eval);
  CHECK(net.buffers() == before);
  net.forward(x, nn::Mode::train_frozen);
  CHECK(net.buffers() == before);

  // Running mean after one update: 0.9 * 0 + 0.1 * batch mean of the first linear layer.
  const MatD z = (net.params()[0] * x).colwise() + net.params()[1].col(0);
  const MatD mean = z.rowwise().mean();
  const MatD var = (z.colwise() - mean.col(0)).array().square().rowwise().sum() / 7.0;
  net.forward(x, nn::Mode::train);
  CHECK((net.buffers()[0] - 0.1 * mean).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((net.buffers()[1] - (0.9 * MatD::Ones(5, 1) + 0.1 * var)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("eval forward matches predict and ignores dropout") {
  auto net = small_net(0.5);
  const MatD x = batch(4, 5);
  CHECK((net.forward(x, nn::Mode::eval) - net.predict(x)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK_THROWS_AS(net.forward(batch(1, 6), nn::Mode::train), ContractError);
  CHECK_THROWS_AS(net.forward(x, nn::Mode::train, nullptr), ContractError);
}

TEST_CASE("training batch normalization is invariant to a per-feature shift of the pre-activation") {
  auto net = small_net();
  const MatD x = batch(6, 8);
  const MatD a = net.forward(x, nn::Mode::train_frozen);
  net.params()[1].array() += 3.0;
  const MatD b = net.forward(x, nn::Mode::train_frozen);
  CHECK((a - b).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("AdamW first step moves each weight by lr against the gradient sign, after decay") {
  std::vector<MatD> params{MatD::Constant(2, 1, 1.0)};
  std::vector<MatD> grads{MatD(2, 1)};
  grads[0] << 0.3, -2.0;
  nn::AdamWConfig c;
  c.lr = 0.01;
  c.weight_decay = 0.1;
  nn::AdamW<double> opt(params, c);
  opt.step(params, grads);
  const double decayed = 1.0 - 0.01 * 0.1;
  CHECK(params[0](0) == doctest::Approx(decayed - 0.01 * 0.3 / (0.3 + 1e-8)).epsilon(1e-12));
  CHECK(params[0](1) == doctest::Approx(decayed + 0.01 * 2.0 / (2.0 + 1e-8)).epsilon(1e-12));
  CHECK(opt.steps() == 1);

  // Second step with the same gradient: bias-corrected moments equal the gradient again.
  opt.step(params, grads);
  CHECK(params[0](0) == doctest::Approx((decayed - 0.01 * 0.3 / (0.3 + 1e-8)) * decayed - 0.01 * 0.3 / (0.3 + 1e-8)));
}

TEST_CASE("Huber loss is quadratic inside delta and linear outside") {
  MatD g;
  MatD p(1, 1), t(1, 1);
  p << -1.0;
  t << 0.0;
  CHECK(nn::huber<double>(p, t, g) == doctest::Approx(0.5));
  CHECK(g(0, 0) == doctest::Approx(-1.0));
  p << 3.0;
  CHECK(nn::huber<double>(p, t, g) == doctest::Approx(2.5));
  CHECK(g(0, 0) == doctest::Approx(1.0));
  MatD p2(1, 2), t2 = MatD::Zero(1, 2);
  p2 << 0.5, -4.0;
  CHECK(nn::huber<double>(p2, t2, g) == doctest::Approx((0.125 + 3.5) / 2.0));
  CHECK(g(0, 0) == doctest::Approx(0.25));
  CHECK(g(0, 1) == doctest::Approx(-0.5));
}

TEST_CASE("parameter counts") {
  Rng rng(1);
  nn::MlpConfig c;
  c.input = 46;
  c.hidden = {256, 512, 256};
  c.output = 4;
  const nn::Mlp<float> net(c, rng);
  const std::size_t want = (46 * 256 + 256 + 512) + (256 * 512 + 512 + 1024) + (512 * 256 + 256 + 512) + (256 * 4 + 4);
  CHECK(net.parameter_count() == want);
  CHECK(net.buffers().size() == 6);
}
