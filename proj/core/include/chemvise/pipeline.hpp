#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "chemvise/augment.hpp"
#include "chemvise/classify.hpp"
#include "chemvise/config.hpp"
#include "chemvise/dataset.hpp"
#include "chemvise/embedder.hpp"
#include "chemvise/targets.hpp"

namespace chemvise {

// A windowed, z-scored trial ready for learning.
struct Example {
  std::string trial_id;
  Vector features;
  AnalyteMix mix;
  bool positive = false;
};

std::vector<Example> make_examples(const std::vector<Trial>& trials, double pre_onset_s,
                                   double window_s, std::string_view target_analyte);

enum class ModelFamily { kChemVise, kFfnn, kRawSvc };
enum class Head { kSvc, kKnn, kPcaSvc };

std::string_view to_string(ModelFamily family);
std::string_view to_string(Head head);
ModelFamily parse_family(std::string_view text);
Head parse_head(std::string_view text);

struct PipelineSpec {
  ModelFamily family = ModelFamily::kChemVise;
  Head head = Head::kSvc;
  TargetKind target_kind = TargetKind::kSemantic;

  // e.g. "chemvise-svc", "ffnn", "svc-raw".
  std::string name() const;
};

struct HyperParams {
  TrainConfig net;
  double c_penalty = 2e-3;
  double class_weight_ratio = 1.0;

  // Only the fields the family uses, as "key=value;..." (no commas).
  std::string describe(ModelFamily family) const;
};

struct FitContext {
  const TargetSpace* space = nullptr;  // required for ChemVise
  MixPolicy policy;
  bool augment_baselines = true;
  ClassifyConfig classify;
};

class FittedPipeline {
 public:
  PipelineSpec spec;
  HyperParams hyper;
  std::optional<MLPModel> net;
  std::optional<LinearSVCModel> svc;
  std::optional<PCAModel> pca;
  Matrix knn_points;
  std::vector<bool> knn_labels;
  int knn_k = 5;

  // What the head sees: an embedding, a PCA projection of one, or raw features.
  Vector represent(const Vector& features) const;
  bool predict(const Vector& features) const;
  std::vector<bool> predict(std::span<const Example> examples) const;
};

// Fits the embedder (or baseline network) and then the head. ChemVise
// heads train on the embedded singles plus head_mix_ratio * n synthetic
// mixes of random single pairs.
FittedPipeline fit_pipeline(const PipelineSpec& spec, const HyperParams& hyper,
                            std::span<const Example> train, const FitContext& ctx,
                            std::uint64_t seed);

// Re-fits only the head of a ChemVise pipeline on top of `embedder`.
FittedPipeline fit_head(const PipelineSpec& spec, const HyperParams& hyper, const MLPModel& embedder,
                        std::span<const Example> train, const FitContext& ctx, std::uint64_t seed);

MLPModel fit_embedder(const HyperParams& hyper, std::span<const Example> train,
                      const FitContext& ctx);

// Saved form of a trained pipeline plus the preprocessing it expects.
struct PipelineBundle {
  FittedPipeline pipeline;
  double window_s = 0.0;
  double pre_onset_s = 0.4;
  std::string target_analyte;
};

void save_bundle(const PipelineBundle& bundle, const std::filesystem::path& path);
PipelineBundle load_bundle(const std::filesystem::path& path);

}  // namespace chemvise
