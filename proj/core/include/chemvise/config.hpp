#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "chemvise/augment.hpp"
#include "chemvise/common.hpp"
#include "chemvise/embedder.hpp"
#include "chemvise/signals.hpp"

namespace chemvise {

// Seven evenly spaced lengths from 2.4 s to 4.0 s inclusive.
std::vector<double> default_window_lengths();

struct SimulatorConfig {
  std::vector<std::string> analytes{"A", "B", "C", "D"};
  std::string target_analyte = "A";
  std::vector<double> concentrations{0.125, 0.15, 0.20, 0.25};
  int replicates = 5;
  int n_sensors = 8;
  double sample_rate_hz = 50.0;
  ExposureSchedule schedule;
  double pre_onset_s = 0.4;
  double interference_gamma = 0.25;
  double noise_sigma = 0.05;
  bool soft_clip = false;
  double soft_clip_scale = 1.0;
  int holdout_doubles = 39;
  // Fraction of singles tagged `val` in simulated datasets.
  double val_fraction = 0.0;
  // Coatings: explicit values, or a random model drawn from model_seed.
  std::optional<Matrix> affinities;  // [n_sensors x n_analytes]
  std::optional<Vector> baselines;
  std::optional<Vector> tau_rise_s;
  std::optional<Vector> tau_decay_s;
  std::uint64_t model_seed = 7;

  AffinityModel affinity_model() const;
  void validate() const;
};

struct TargetsConfig {
  int dimension = 512;
  // Semantic vectors come from this CSV when set, else are synthesised.
  std::string embeddings_path;
  int n_clusters = 2;
  double cluster_spread = 0.02;
  std::optional<std::vector<int>> cluster_of;
  std::uint64_t seed = 11;
};

struct AugmentConfig {
  MixPolicy policy;
  // Also mix the training data of the FFNN and raw-feature SVC baselines.
  bool augment_baselines = true;
};

struct ClassifyConfig {
  int knn_k = 5;
  long svc_iterations = 50'000;
  double c_penalty = 8e-3;
  double class_weight_ratio = 2.0;
  // Synthetic mixed samples added to a head's training set, per single.
  double head_mix_ratio = 1.0;
};

struct GridSpec {
  std::vector<int> widths{128, 512, 1024, 2048, 4096, 8192};
  std::vector<double> learning_rates{1e-5, 3e-5, 1e-4, 3e-4};
  std::vector<int> epochs{1000, 2000, 4000};
  std::vector<int> batch_sizes{4, 8, 16, 32};
  double c_min = 1e-4;
  double c_max = 8e-3;
  std::vector<double> class_weights{1.0, 2.0, 4.0};
  int budget = 25;
  int n_folds = 5;

  void validate() const;
};

struct HarnessConfig {
  GridSpec grid;
  int n_repeats = 5;
  std::uint64_t master_seed = 0;
  std::vector<double> window_lengths_s = default_window_lengths();
  double representation_window_s = 4.0;
  // false: both protocols skip the random search and train with the fixed
  // `embedder` and `classify` sections.
  bool search = true;
  int threads = 1;
};

struct Config {
  SimulatorConfig simulator;
  TargetsConfig targets;
  AugmentConfig augment;
  TrainConfig embedder;
  ClassifyConfig classify;
  HarnessConfig harness;

  void validate() const;
};

// Rejects unknown keys anywhere in the document.
Config config_from_json(const nlohmann::json& doc);
nlohmann::json config_to_json(const Config& config);
Config load_config(const std::filesystem::path& path);

// Applies CHEMVISE_SEED to harness.master_seed when the variable is set.
void apply_environment(Config& config);

}  // namespace chemvise
