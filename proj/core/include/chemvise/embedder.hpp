#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "chemvise/augment.hpp"
#include "chemvise/common.hpp"

namespace chemvise {

enum class Activation { kRelu };
enum class Optimizer { kSgd, kAdam };

std::string_view to_string(Optimizer optimizer);
Optimizer parse_optimizer(std::string_view text);

// Fully-connected network: affine + ReLU on every hidden layer, affine output.
// weights[l] is [layer_dims[l+1] x layer_dims[l]].
struct MLPModel {
  std::vector<int> layer_dims;
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
  Activation activation = Activation::kRelu;
  std::uint64_t init_seed = 0;

  int input_dim() const { return layer_dims.front(); }
  int output_dim() const { return layer_dims.back(); }
  std::size_t n_layers() const { return weights.size(); }
  Eigen::Index n_parameters() const;

  void validate() const;
};

struct Gradients {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
};

struct LossAndGrad {
  double loss = 0.0;
  Gradients grads;
};

struct TrainConfig {
  int width = 128;
  double learning_rate = 1e-4;
  int epochs = 1000;
  int batch_size = 8;
  int n_hidden_layers = 3;
  Optimizer optimizer = Optimizer::kAdam;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TrainHistory {
  std::vector<double> epoch_loss;
  double final_validation_loss = 0.0;  // NaN when no validation data
};

struct TrainedModel {
  MLPModel model;
  TrainHistory history;
};

// He initialisation: weights ~ N(0, 2 / fan_in), biases zero.
MLPModel init_mlp(const std::vector<int>& layer_dims, std::uint64_t seed);

std::vector<int> layer_dims_for(int input_dim, const TrainConfig& cfg, int output_dim);

Eigen::VectorXd forward(const MLPModel& model, const Eigen::VectorXd& x);
// Columns of `inputs` are samples.
Eigen::MatrixXd forward_batch(const MLPModel& model, const Eigen::MatrixXd& inputs);
inline Eigen::VectorXd embed(const MLPModel& model, const Eigen::VectorXd& x) {
  return forward(model, x);
}

// Mean squared error averaged over samples and output dimensions, with exact
// reverse-mode gradients. Columns of inputs/targets are samples.
LossAndGrad loss_and_grad(const MLPModel& model, const Eigen::MatrixXd& inputs,
                          const Eigen::MatrixXd& targets);

// Sigmoid cross-entropy on a single logit per sample; labels in {0, 1}.
LossAndGrad logistic_loss_and_grad(const MLPModel& model, const Eigen::MatrixXd& inputs,
                                   const Eigen::RowVectorXd& labels);

Eigen::VectorXd flatten_parameters(const MLPModel& model);
void assign_parameters(MLPModel& model, const Eigen::VectorXd& flat);
Eigen::VectorXd flatten_gradients(const Gradients& grads);

// Minibatch training toward the samples' target vectors, with seeded
// shuffling and on-the-fly mixing of every batch.
TrainedModel train_embedder(std::span<const TrainingSample> train,
                            std::span<const TrainingSample> validation, const TrainConfig& cfg,
                            const MixPolicy& policy);

// Same architecture with one logit output trained on the binary labels.
TrainedModel train_ffnn_baseline(std::span<const TrainingSample> train, const TrainConfig& cfg,
                                 const MixPolicy& policy);

inline bool ffnn_predict(const MLPModel& model, const Eigen::VectorXd& x) {
  return forward(model, x)[0] > 0.0;
}

void save_mlp(const MLPModel& model, std::ostream& out);
MLPModel load_mlp(std::istream& in);

}  // namespace chemvise
