#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "chemvise/config.hpp"
#include "chemvise/pipeline.hpp"
#include "chemvise/report.hpp"

namespace chemvise {

// Sum over p = 1..n of C(n, p) * k^p. Raises kNumeric on uint64 overflow.
std::uint64_t count_experiments(std::uint64_t n, std::uint64_t k);

struct Fold {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
};

// Each class is shuffled on its own, the classes are concatenated, and
// position i goes to fold i mod n_folds.
std::vector<Fold> kfold_split(const std::vector<bool>& labels, int n_folds, std::uint64_t seed);

struct CvRow {
  int config_index = 0;
  int fold = 0;
  double mcc = 0.0;
  std::string hyperparameters;
};

struct GridResult {
  HyperParams best;
  int best_index = 0;
  std::vector<HyperParams> sampled;
  std::vector<double> mean_mcc;
  std::vector<CvRow> cv_table;
};

// `budget` configurations drawn from the grid; fields the family does not
// use keep their values from `base`.
std::vector<HyperParams> sample_configs(ModelFamily family, const GridSpec& grid,
                                        const HyperParams& base, std::uint64_t seed);

// Raises kHygiene when any training example is not a single exposure.
GridResult grid_search(const PipelineSpec& spec, const GridSpec& grid, const HyperParams& base,
                       std::span<const Example> train_singles, const FitContext& ctx,
                       std::uint64_t seed);

TargetSpace build_target_space(const Config& config, TargetKind kind);

struct RunOptions {
  // Read trials from this directory instead of simulating them per repeat.
  std::optional<std::filesystem::path> dataset_dir;
  std::function<void(const std::string&)> progress;
};

ExperimentReport run_representation_protocol(const Config& config, const RunOptions& options = {});
ExperimentReport run_window_sweep(const Config& config, const RunOptions& options = {});

}  // namespace chemvise
