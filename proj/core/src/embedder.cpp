#include "chemvise/embedder.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>

#include "chemvise/csv.hpp"
#include "chemvise/error.hpp"

namespace chemvise {

std::string_view to_string(Optimizer optimizer) {
  return optimizer == Optimizer::kSgd ? "sgd" : "adam";
}

Optimizer parse_optimizer(std::string_view text) {
  if (text == "sgd") return Optimizer::kSgd;
  if (text == "adam") return Optimizer::kAdam;
  raise(ErrorKind::kConfig, "unknown optimizer '" + std::string(text) + "'");
}

Eigen::Index MLPModel::n_parameters() const {
  Eigen::Index n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) n += weights[l].size() + biases[l].size();
  return n;
}

void MLPModel::validate() const {
  require(layer_dims.size() >= 2, ErrorKind::kConfig, "a network needs at least two layers");
  require(weights.size() + 1 == layer_dims.size() && biases.size() == weights.size(),
          ErrorKind::kDimension, "parameter count does not match layer dims");
  for (std::size_t l = 0; l < weights.size(); ++l) {
    require(weights[l].rows() == layer_dims[l + 1] && weights[l].cols() == layer_dims[l] &&
                biases[l].size() == layer_dims[l + 1],
            ErrorKind::kDimension, "layer " + std::to_string(l) + " has inconsistent shape");
  }
}

void TrainConfig::validate() const {
  require(width >= 1 && epochs >= 0 && batch_size >= 1 && n_hidden_layers >= 0,
          ErrorKind::kConfig, "train config values must be positive");
  require(learning_rate > 0.0 && std::isfinite(learning_rate), ErrorKind::kConfig,
          "learning rate must be positive");
}

MLPModel init_mlp(const std::vector<int>& layer_dims, std::uint64_t seed) {
  require(layer_dims.size() >= 2, ErrorKind::kConfig, "a network needs at least two layers");
  for (int d : layer_dims) require(d >= 1, ErrorKind::kConfig, "layer dims must be positive");
  MLPModel model;
  model.layer_dims = layer_dims;
  model.init_seed = seed;
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
    const int fan_in = layer_dims[l];
    const int fan_out = layer_dims[l + 1];
    const double scale = std::sqrt(2.0 / fan_in);
    Eigen::MatrixXd w(fan_out, fan_in);
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = scale * normal(rng);
    }
    model.weights.push_back(std::move(w));
    model.biases.push_back(Eigen::VectorXd::Zero(fan_out));
  }
  return model;
}

std::vector<int> layer_dims_for(int input_dim, const TrainConfig& cfg, int output_dim) {
  std::vector<int> dims{input_dim};
  for (int i = 0; i < cfg.n_hidden_layers; ++i) dims.push_back(cfg.width);
  dims.push_back(output_dim);
  return dims;
}

namespace {

void check_inputs(const MLPModel& model, const Eigen::MatrixXd& inputs) {
  require(inputs.rows() == model.input_dim(), ErrorKind::kDimension,
          "input has " + std::to_string(inputs.rows()) + " features, model expects " +
              std::to_string(model.input_dim()));
  require(inputs.allFinite(), ErrorKind::kNumeric, "inputs contain NaN or Inf");
}

// Forward pass keeping every layer's post-activation output; acts[0] is the input.
std::vector<Eigen::MatrixXd> forward_cached(const MLPModel& model, const Eigen::MatrixXd& inputs) {
  std::vector<Eigen::MatrixXd> acts;
  acts.reserve(model.n_layers() + 1);
  acts.push_back(inputs);
  for (std::size_t l = 0; l < model.n_layers(); ++l) {
    Eigen::MatrixXd z = model.weights[l] * acts.back();
    z.colwise() += model.biases[l];
    if (l + 1 < model.n_layers()) z = z.cwiseMax(0.0);
    acts.push_back(std::move(z));
  }
  return acts;
}

// Backpropagates d(loss)/d(output) through the cached activations.
Gradients backward(const MLPModel& model, const std::vector<Eigen::MatrixXd>& acts,
                   Eigen::MatrixXd delta) {
  const std::size_t n_layers = model.n_layers();
  Gradients grads;
  grads.weights.resize(n_layers);
  grads.biases.resize(n_layers);
  for (std::size_t l = n_layers; l-- > 0;) {
    grads.weights[l].noalias() = delta * acts[l].transpose();
    grads.biases[l] = delta.rowwise().sum();
    if (l == 0) break;
    Eigen::MatrixXd upstream = model.weights[l].transpose() * delta;
    delta = (acts[l].array() > 0.0).select(upstream, 0.0);
  }
  return grads;
}

}  // namespace

Eigen::MatrixXd forward_batch(const MLPModel& model, const Eigen::MatrixXd& inputs) {
  check_inputs(model, inputs);
  Eigen::MatrixXd h = inputs;
  for (std::size_t l = 0; l < model.n_layers(); ++l) {
    Eigen::MatrixXd z = model.weights[l] * h;
    z.colwise() += model.biases[l];
    if (l + 1 < model.n_layers()) z = z.cwiseMax(0.0);
    h = std::move(z);
  }
  return h;
}

Eigen::VectorXd forward(const MLPModel& model, const Eigen::VectorXd& x) {
  return forward_batch(model, x);
}

LossAndGrad loss_and_grad(const MLPModel& model, const Eigen::MatrixXd& inputs,
                          const Eigen::MatrixXd& targets) {
  check_inputs(model, inputs);
  require(inputs.cols() >= 1, ErrorKind::kDimension, "empty batch");
  require(targets.rows() == model.output_dim() && targets.cols() == inputs.cols(),
          ErrorKind::kDimension, "targets do not match the model output");
  require(targets.allFinite(), ErrorKind::kNumeric, "targets contain NaN or Inf");
  const auto acts = forward_cached(model, inputs);
  const Eigen::MatrixXd residual = acts.back() - targets;
  const double count = static_cast<double>(residual.size());
  LossAndGrad out;
  out.loss = residual.squaredNorm() / count;
  out.grads = backward(model, acts, (2.0 / count) * residual);
  return out;
}

LossAndGrad logistic_loss_and_grad(const MLPModel& model, const Eigen::MatrixXd& inputs,
                                   const Eigen::RowVectorXd& labels) {
  check_inputs(model, inputs);
  require(inputs.cols() >= 1, ErrorKind::kDimension, "empty batch");
  require(model.output_dim() == 1 && labels.size() == inputs.cols(), ErrorKind::kDimension,
          "logistic loss needs one logit per sample");
  const auto acts = forward_cached(model, inputs);
  const Eigen::ArrayXXd z = acts.back().array();
  const Eigen::ArrayXXd y = labels.array();
  const double n = static_cast<double>(inputs.cols());
  // log(1 + e^z) - y z, written to stay finite for large |z|.
  const Eigen::ArrayXXd per_sample = z.max(0.0) - z * y + (1.0 + (-z.abs()).exp()).log();
  LossAndGrad out;
  out.loss = per_sample.sum() / n;
  const Eigen::ArrayXXd sigmoid = 1.0 / (1.0 + (-z).exp());
  out.grads = backward(model, acts, ((sigmoid - y) / n).matrix());
  return out;
}

Eigen::VectorXd flatten_parameters(const MLPModel& model) {
  Eigen::VectorXd flat(model.n_parameters());
  Eigen::Index offset = 0;
  for (std::size_t l = 0; l < model.n_layers(); ++l) {
    const auto& w = model.weights[l];
    flat.segment(offset, w.size()) = Eigen::Map<const Eigen::VectorXd>(w.data(), w.size());
    offset += w.size();
    flat.segment(offset, model.biases[l].size()) = model.biases[l];
    offset += model.biases[l].size();
  }
  return flat;
}

void assign_parameters(MLPModel& model, const Eigen::VectorXd& flat) {
  require(flat.size() == model.n_parameters(), ErrorKind::kDimension,
          "parameter vector has the wrong length");
  Eigen::Index offset = 0;
  for (std::size_t l = 0; l < model.n_layers(); ++l) {
    auto& w = model.weights[l];
    Eigen::Map<Eigen::VectorXd>(w.data(), w.size()) = flat.segment(offset, w.size());
    offset += w.size();
    model.biases[l] = flat.segment(offset, model.biases[l].size());
    offset += model.biases[l].size();
  }
}

Eigen::VectorXd flatten_gradients(const Gradients& grads) {
  Eigen::Index n = 0;
  for (std::size_t l = 0; l < grads.weights.size(); ++l) {
    n += grads.weights[l].size() + grads.biases[l].size();
  }
  Eigen::VectorXd flat(n);
  Eigen::Index offset = 0;
  for (std::size_t l = 0; l < grads.weights.size(); ++l) {
    const auto& w = grads.weights[l];
    flat.segment(offset, w.size()) = Eigen::Map<const Eigen::VectorXd>(w.data(), w.size());
    offset += w.size();
    flat.segment(offset, grads.biases[l].size()) = grads.biases[l];
    offset += grads.biases[l].size();
  }
  return flat;
}

namespace {

enum class LossKind { kMse, kLogistic };

class ParameterUpdater {
 public:
  ParameterUpdater(const MLPModel& model, const TrainConfig& cfg) : cfg_(cfg) {
    if (cfg.optimizer == Optimizer::kAdam) {
      for (std::size_t l = 0; l < model.n_layers(); ++l) {
        m_w_.push_back(Eigen::MatrixXd::Zero(model.weights[l].rows(), model.weights[l].cols()));
        v_w_.push_back(m_w_.back());
        m_b_.push_back(Eigen::VectorXd::Zero(model.biases[l].size()));
        v_b_.push_back(m_b_.back());
      }
    }
  }

  void step(MLPModel& model, const Gradients& grads) {
    const double lr = cfg_.learning_rate;
    if (cfg_.optimizer == Optimizer::kSgd) {
      for (std::size_t l = 0; l < model.n_layers(); ++l) {
        model.weights[l].noalias() -= lr * grads.weights[l];
        model.biases[l].noalias() -= lr * grads.biases[l];
      }
      return;
    }
    ++t_;
    const double c1 = 1.0 - std::pow(kBeta1, t_);
    const double c2 = 1.0 - std::pow(kBeta2, t_);
    const double step = lr * std::sqrt(c2) / c1;
    const double eps = kEps * std::sqrt(c2);
    for (std::size_t l = 0; l < model.n_layers(); ++l) {
      update(model.weights[l].array(), grads.weights[l].array(), m_w_[l].array(), v_w_[l].array(),
             step, eps);
      update(model.biases[l].array(), grads.biases[l].array(), m_b_[l].array(), v_b_[l].array(),
             step, eps);
    }
  }

 private:
  template <typename P, typename G, typename M>
  static void update(P&& param, const G& grad, M&& m, M&& v, double step, double eps) {
    m = kBeta1 * m + (1.0 - kBeta1) * grad;
    v = kBeta2 * v + (1.0 - kBeta2) * grad.square();
    param -= step * m / (v.sqrt() + eps);
  }

  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;

  TrainConfig cfg_;
  int t_ = 0;
  std::vector<Eigen::MatrixXd> m_w_, v_w_;
  std::vector<Eigen::VectorXd> m_b_, v_b_;
};

LossAndGrad batch_loss(LossKind kind, const MLPModel& model,
                       const std::vector<TrainingSample>& batch) {
  const auto n = static_cast<Eigen::Index>(batch.size());
  Eigen::MatrixXd inputs(model.input_dim(), n);
  for (Eigen::Index i = 0; i < n; ++i) inputs.col(i) = batch[static_cast<std::size_t>(i)].features;
  if (kind == LossKind::kMse) {
    Eigen::MatrixXd targets(model.output_dim(), n);
    for (Eigen::Index i = 0; i < n; ++i) targets.col(i) = batch[static_cast<std::size_t>(i)].target;
    return loss_and_grad(model, inputs, targets);
  }
  Eigen::RowVectorXd labels(n);
  for (Eigen::Index i = 0; i < n; ++i) labels[i] = batch[static_cast<std::size_t>(i)].positive ? 1.0 : 0.0;
  return logistic_loss_and_grad(model, inputs, labels);
}

TrainedModel train_network(LossKind kind, std::span<const TrainingSample> train,
                           std::span<const TrainingSample> validation, const TrainConfig& cfg,
                           const MixPolicy& policy) {
  cfg.validate();
  policy.validate();
  require(!train.empty(), ErrorKind::kDegenerate, "empty training set");
  const auto input_dim = static_cast<int>(train.front().features.size());
  const int output_dim = kind == LossKind::kMse ? static_cast<int>(train.front().target.size()) : 1;
  require(input_dim >= 1 && output_dim >= 1, ErrorKind::kDimension, "empty features or targets");
  for (const auto& s : train) {
    require(s.features.size() == input_dim, ErrorKind::kDimension, "ragged training features");
    if (kind == LossKind::kMse) {
      require(s.target.size() == output_dim, ErrorKind::kDimension, "ragged training targets");
    }
  }

  TrainedModel result;
  result.model = init_mlp(layer_dims_for(input_dim, cfg, output_dim), cfg.seed);
  result.history.final_validation_loss = std::numeric_limits<double>::quiet_NaN();
  if (cfg.epochs == 0) return result;

  MLPModel& model = result.model;
  ParameterUpdater updater(model, cfg);
  Rng shuffle_rng(derive_seed(cfg.seed, 0x5eedULL));
  Rng mix_rng(derive_seed(policy.seed, cfg.seed));
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto batch_size = static_cast<std::size_t>(cfg.batch_size);
  std::vector<TrainingSample> batch;
  batch.reserve(batch_size);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
      const std::size_t stop = std::min(order.size(), start + batch_size);
      batch.clear();
      for (std::size_t k = start; k < stop; ++k) batch.push_back(train[order[k]]);
      const auto mixed = augment_batch(batch, policy, mix_rng);
      const LossAndGrad lg = batch_loss(kind, model, mixed);
      if (!std::isfinite(lg.loss)) {
        raise(ErrorKind::kTraining, "loss diverged at epoch " + std::to_string(epoch));
      }
      loss_sum += lg.loss * static_cast<double>(mixed.size());
      updater.step(model, lg.grads);
    }
    for (std::size_t l = 0; l < model.n_layers(); ++l) {
      if (!model.weights[l].allFinite() || !model.biases[l].allFinite()) {
        raise(ErrorKind::kTraining, "parameters became non-finite at epoch " + std::to_string(epoch));
      }
    }
    result.history.epoch_loss.push_back(loss_sum / static_cast<double>(order.size()));
  }

  if (!validation.empty()) {
    std::vector<TrainingSample> val(validation.begin(), validation.end());
    result.history.final_validation_loss = batch_loss(kind, model, val).loss;
  }
  return result;
}

}  // namespace

TrainedModel train_embedder(std::span<const TrainingSample> train,
                            std::span<const TrainingSample> validation, const TrainConfig& cfg,
                            const MixPolicy& policy) {
  return train_network(LossKind::kMse, train, validation, cfg, policy);
}

TrainedModel train_ffnn_baseline(std::span<const TrainingSample> train, const TrainConfig& cfg,
                                 const MixPolicy& policy) {
  return train_network(LossKind::kLogistic, train, {}, cfg, policy);
}

void save_mlp(const MLPModel& model, std::ostream& out) {
  model.validate();
  out << "chemvise-mlp 1\n";
  out << "layer_dims";
  for (int d : model.layer_dims) out << ' ' << d;
  out << "\nactivation relu\nseed " << model.init_seed << '\n';
  for (std::size_t l = 0; l < model.n_layers(); ++l) {
    const auto& w = model.weights[l];
    out << "weights " << l << '\n';
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      for (Eigen::Index j = 0; j < w.cols(); ++j) {
        if (j) out << ' ';
        out << csv::format_double(w(i, j));
      }
      out << '\n';
    }
    out << "biases " << l << '\n';
    for (Eigen::Index i = 0; i < model.biases[l].size(); ++i) {
      if (i) out << ' ';
      out << csv::format_double(model.biases[l][i]);
    }
    out << '\n';
  }
  out << "end\n";
}

namespace {

std::string next_token(std::istream& in, std::string_view what) {
  std::string token;
  if (!(in >> token)) raise(ErrorKind::kParse, "model file truncated while reading " + std::string(what));
  return token;
}

void expect_token(std::istream& in, std::string_view expected) {
  const std::string token = next_token(in, expected);
  require(token == expected, ErrorKind::kParse,
          "model file: expected '" + std::string(expected) + "', found '" + token + "'");
}

double next_double(std::istream& in) {
  return csv::parse_double(next_token(in, "parameter"), 0, "parameter");
}

}  // namespace

MLPModel load_mlp(std::istream& in) {
  expect_token(in, "chemvise-mlp");
  expect_token(in, "1");
  expect_token(in, "layer_dims");
  std::string line;
  std::getline(in, line);
  std::istringstream dims_in(line);
  std::vector<int> dims;
  int d = 0;
  while (dims_in >> d) dims.push_back(d);
  require(dims.size() >= 2, ErrorKind::kParse, "model file: bad layer_dims");
  for (int v : dims) require(v >= 1, ErrorKind::kParse, "model file: non-positive layer dim");
  expect_token(in, "activation");
  expect_token(in, "relu");
  expect_token(in, "seed");
  MLPModel model;
  model.layer_dims = dims;
  model.init_seed = std::stoull(next_token(in, "seed"));
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    expect_token(in, "weights");
    expect_token(in, std::to_string(l));
    Eigen::MatrixXd w(dims[l + 1], dims[l]);
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = next_double(in);
    }
    expect_token(in, "biases");
    expect_token(in, std::to_string(l));
    Eigen::VectorXd b(dims[l + 1]);
    for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = next_double(in);
    model.weights.push_back(std::move(w));
    model.biases.push_back(std::move(b));
  }
  expect_token(in, "end");
  model.validate();
  return model;
}

}  // namespace chemvise
