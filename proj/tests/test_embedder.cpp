#include <doctest.h>

#include <cmath>
#include <sstream>

#include "chemvise/embedder.hpp"
#include "chemvise/error.hpp"

using namespace chemvise;

namespace {

MLPModel random_model(const std::vector<int>& dims, Rng& rng) {
  MLPModel m = init_mlp(dims, 0);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (auto& w : m.weights) w = w.unaryExpr([&](double) { return u(rng); });
  for (auto& b : m.biases) b = b.unaryExpr([&](double) { return u(rng); });
  return m;
}

Eigen::MatrixXd random_matrix(Eigen::Index r, Eigen::Index c, Rng& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  return Eigen::MatrixXd::NullaryExpr(r, c, [&]() { return u(rng); });
}

// Central differences over every parameter, max relative error.
template <typename LossFn>
double gradient_error(MLPModel model, const Gradients& grads, LossFn loss) {
  const Vector analytic = flatten_gradients(grads);
  const Vector theta = flatten_parameters(model);
  const double h = 1e-5;
  double worst = 0.0;
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    Vector t = theta;
    t[i] += h;
    assign_parameters(model, t);
    const double up = loss(model);
    t[i] -= 2 * h;
    assign_parameters(model, t);
    const double down = loss(model);
    const double numeric = (up - down) / (2 * h);
    const double denom = std::max({std::abs(numeric), std::abs(analytic[i]), 1e-6});
    worst = std::max(worst, std::abs(numeric - analytic[i]) / denom);
  }
  return worst;
}

}  // namespace

TEST_CASE("init uses variance 2/fan_in and zero biases") {
  const auto m = init_mlp({100, 100, 2}, 5);
  const auto& w = m.weights[0];
  const double var = w.array().square().mean() - std::pow(w.mean(), 2);
  CHECK(std::abs(var - 2.0 / 100.0) < 0.2 * 2.0 / 100.0);
  for (const auto& b : m.biases) CHECK(b.isZero(0.0));
  const auto again = init_mlp({100, 100, 2}, 5);
  CHECK(again.weights[1] == m.weights[1]);
  CHECK(init_mlp({4, 8, 2}, 1).weights[0] == init_mlp({4, 8, 2}, 1).weights[0]);
  CHECK_THROWS_AS(init_mlp({4}, 1), Error);
  CHECK_THROWS_AS(init_mlp({4, 0, 2}, 1), Error);
}

TEST_CASE("forward pass") {
  MLPModel zero = init_mlp({3, 4, 2}, 1);
  for (auto& w : zero.weights) w.setZero();
  CHECK(forward(zero, Vector::Ones(3)).isZero(0.0));

  MLPModel identity = init_mlp({3, 3}, 1);
  identity.weights[0].setIdentity();
  const Vector x = (Vector(3) << -1.0, 2.0, 0.5).finished();
  CHECK(forward(identity, x) == x);

  // 2-2-2 network by hand
  MLPModel m = init_mlp({2, 2, 2}, 1);
  m.weights[0] << 1.0, -2.0, 0.5, 0.25;
  m.biases[0] << 0.1, -0.2;
  m.weights[1] << 2.0, -1.0, 0.0, 3.0;
  m.biases[1] << 0.5, 0.0;
  const Vector in = (Vector(2) << 0.4, 0.3).finished();
  // hidden: relu(0.4 - 0.6 + 0.1) = 0, relu(0.2 + 0.075 - 0.2) = 0.075
  const Vector out = forward(m, in);
  CHECK(std::abs(out[0] - (0.5 - 0.075)) < 1e-12);
  CHECK(std::abs(out[1] - 0.225) < 1e-12);
  CHECK_THROWS_AS(forward(m, Vector::Zero(3)), Error);
}

TEST_CASE("hidden activations are never negative") {
  Rng rng(4);
  const auto m = random_model({5, 7, 7, 3}, rng);
  Eigen::MatrixXd h = random_matrix(5, 10, rng);
  for (std::size_t l = 0; l + 1 < m.n_layers(); ++l) {
    h = ((m.weights[l] * h).colwise() + m.biases[l]).cwiseMax(0.0);
    CHECK(h.minCoeff() >= 0.0);
  }
}

TEST_CASE("MSE gradients match central differences on 100 random models") {
  Rng rng(2024);
  std::uniform_int_distribution<int> dim(1, 5);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<int> dims{dim(rng)};
    const int hidden = dim(rng) % 3 + 1;
    for (int l = 0; l < hidden; ++l) dims.push_back(dim(rng));
    dims.push_back(dim(rng));
    const MLPModel m = random_model(dims, rng);
    const auto inputs = random_matrix(dims.front(), dim(rng), rng);
    const auto targets = random_matrix(dims.back(), inputs.cols(), rng);
    const auto lg = loss_and_grad(m, inputs, targets);
    worst = std::max(worst, gradient_error(m, lg.grads, [&](const MLPModel& p) {
      return loss_and_grad(p, inputs, targets).loss;
    }));
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("six-parameter model gradient") {
  Rng rng(6);
  MLPModel small = init_mlp({2, 2}, 0);  // 4 weights + 2 biases
  small.weights[0] = random_matrix(2, 2, rng);
  small.biases[0] = random_matrix(2, 1, rng);
  CHECK(small.n_parameters() == 6);
  const auto x = random_matrix(2, 3, rng);
  const auto y = random_matrix(2, 3, rng);
  const auto lg = loss_and_grad(small, x, y);
  CHECK(gradient_error(small, lg.grads, [&](const MLPModel& p) { return loss_and_grad(p, x, y).loss; }) < 1e-5);
}

TEST_CASE("logistic gradients match central differences") {
  Rng rng(11);
  double worst = 0.0;
  for (int trial = 0; trial < 30; ++trial) {
    const MLPModel m = random_model({3, 4, 1}, rng);
    const auto x = random_matrix(3, 5, rng);
    Eigen::RowVectorXd y(5);
    for (int i = 0; i < 5; ++i) y[i] = (i + trial) % 2;
    const auto lg = logistic_loss_and_grad(m, x, y);
    worst = std::max(worst, gradient_error(m, lg.grads, [&](const MLPModel& p) {
      return logistic_loss_and_grad(p, x, y).loss;
    }));
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("loss properties") {
  Rng rng(3);
  const MLPModel m = random_model({3, 4, 2}, rng);
  const auto x = random_matrix(3, 4, rng);
  const Eigen::MatrixXd out = forward_batch(m, x);
  const auto exact = loss_and_grad(m, x, out);
  CHECK(exact.loss == 0.0);
  CHECK(flatten_gradients(exact.grads).isZero(0.0));
  const auto y = random_matrix(2, 4, rng);
  const double base = loss_and_grad(m, x, y).loss;
  const Eigen::MatrixXd doubled = out + 2.0 * (y - out);
  CHECK(loss_and_grad(m, x, doubled).loss == doctest::Approx(4.0 * base).epsilon(1e-12));
  Eigen::MatrixXd bad = x;
  bad(0, 0) = std::nan("");
  try {
    loss_and_grad(m, bad, y);
    FAIL("expected numeric error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kNumeric);
  }
}

TEST_CASE("linear model loss is non-increasing under small full-batch SGD steps") {
  Rng rng(8);
  std::vector<TrainingSample> data;
  for (int i = 0; i < 6; ++i) {
    data.push_back({random_matrix(4, 1, rng).col(0), random_matrix(2, 1, rng).col(0), false});
  }
  TrainConfig cfg;
  cfg.n_hidden_layers = 0;
  cfg.optimizer = Optimizer::kSgd;
  cfg.learning_rate = 1e-2;
  cfg.batch_size = 6;
  cfg.epochs = 200;
  MixPolicy none;
  none.mix_probability = 0.0;
  const auto trained = train_embedder(data, {}, cfg, none);
  const auto& loss = trained.history.epoch_loss;
  CHECK(loss.size() == 200);
  for (std::size_t i = 1; i < loss.size(); ++i) CHECK(loss[i] <= loss[i - 1] + 1e-15);
}

TEST_CASE("training overfits a tiny set and is reproducible") {
  Rng rng(12);
  std::vector<TrainingSample> data;
  for (int i = 0; i < 8; ++i) {
    Vector x = random_matrix(40, 1, rng).col(0) * 3.0;
    Vector y = Vector::Zero(16);
    y[i % 4] = 1.0;
    data.push_back({x, y, i % 4 == 0});
  }
  TrainConfig cfg;
  cfg.width = 128;
  cfg.learning_rate = 1e-5;
  cfg.epochs = 2000;
  cfg.batch_size = 4;
  cfg.seed = 3;
  MixPolicy none;
  none.mix_probability = 0.0;
  const auto a = train_embedder(data, {}, cfg, none);
  CHECK(a.history.epoch_loss.back() < 0.01 * a.history.epoch_loss.front());
  CHECK(std::isnan(a.history.final_validation_loss));
  const auto b = train_embedder(data, {}, cfg, none);
  CHECK(a.history.epoch_loss == b.history.epoch_loss);
  CHECK(a.model.weights[0] == b.model.weights[0]);

  cfg.epochs = 0;
  const auto untrained = train_embedder(data, {}, cfg, none);
  CHECK(untrained.history.epoch_loss.empty());
  const auto init = init_mlp(layer_dims_for(40, cfg, 16), cfg.seed);
  for (std::size_t l = 0; l < init.n_layers(); ++l) CHECK(untrained.model.weights[l] == init.weights[l]);
}

TEST_CASE("divergence is a training error") {
  std::vector<TrainingSample> data;
  for (int i = 0; i < 4; ++i) data.push_back({Vector::Constant(3, 1e200 * (i + 1)), Vector::Ones(2), false});
  TrainConfig cfg;
  cfg.width = 4;
  cfg.optimizer = Optimizer::kSgd;
  cfg.learning_rate = 1e-2;
  cfg.epochs = 5;
  try {
    train_embedder(data, {}, cfg, MixPolicy{});
    FAIL("expected training error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kTraining);
    CHECK(std::string(e.what()).find("epoch") != std::string::npos);
  }
}

TEST_CASE("FFNN baseline") {
  Rng rng(5);
  std::vector<TrainingSample> data;
  std::normal_distribution<double> g(0.0, 0.3);
  for (int i = 0; i < 40; ++i) {
    const bool pos = i % 2 == 0;
    Vector x(2);
    x << (pos ? 1.5 : -1.5) + g(rng), g(rng);
    data.push_back({x, Vector(), pos});
  }
  TrainConfig cfg;
  cfg.width = 16;
  cfg.learning_rate = 1e-3;
  cfg.epochs = 200;
  cfg.seed = 2;
  MixPolicy none;
  none.mix_probability = 0.0;
  const auto m = train_ffnn_baseline(data, cfg, none).model;
  CHECK(m.output_dim() == 1);
  for (const auto& s : data) CHECK(ffnn_predict(m, s.features) == s.positive);
  const auto again = train_ffnn_baseline(data, cfg, none).model;
  CHECK(again.weights[0] == m.weights[0]);

  std::vector<TrainingSample> all_pos(data.begin(), data.begin() + 10);
  for (auto& s : all_pos) s.positive = true;
  const auto one_class = train_ffnn_baseline(all_pos, cfg, none).model;
  for (const auto& s : all_pos) CHECK(ffnn_predict(one_class, s.features));
}

TEST_CASE("model text format round trip") {
  Rng rng(1);
  const MLPModel m = random_model({5, 6, 6, 3}, rng);
  std::stringstream buf;
  save_mlp(m, buf);
  const MLPModel back = load_mlp(buf);
  CHECK(back.layer_dims == m.layer_dims);
  CHECK(back.init_seed == m.init_seed);
  const Vector x = random_matrix(5, 1, rng).col(0);
  CHECK(forward(back, x) == forward(m, x));
  std::stringstream broken("chemvise-mlp 1\nlayer_dims 2 x\n");
  CHECK_THROWS_AS(load_mlp(broken), Error);
}
