#pragma once

#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

#include "chemvise/common.hpp"
#include "chemvise/signals.hpp"

namespace chemvise {

// Uniform convex-combination weights in [lambda_min, lambda_max].
struct MixPolicy {
  double lambda_min = 0.3;
  double lambda_max = 0.7;
  double mix_probability = 0.5;
  std::uint64_t seed = 0;

  void validate() const;
};

// One training pair: a feature vector, its regression target and its binary
// label. Targets may be empty for learners that use labels only.
struct TrainingSample {
  Vector features;
  Vector target;
  bool positive = false;
};

double sample_lambda(const MixPolicy& policy, Rng& rng);

std::pair<Vector, Vector> mix_pair(const Vector& x_i, const Vector& y_i, const Vector& x_j,
                                   const Vector& y_j, double lambda);

TrainingSample mix_samples(const TrainingSample& a, const TrainingSample& b, double lambda);

// Each element is replaced, with probability mix_probability, by its mix with
// a distinct partner drawn uniformly from the batch. Size and dimensions are
// preserved. A batch of one passes through with a warning.
std::vector<TrainingSample> augment_batch(const std::vector<TrainingSample>& batch,
                                          const MixPolicy& policy, Rng& rng,
                                          Diagnostics* diagnostics = nullptr);

// A mixed sample is positive iff either constituent contains the target.
bool binary_label_of_mix(const AnalyteMix& first, const AnalyteMix& second, double lambda,
                         std::string_view target_analyte, const MixPolicy& policy);

}  // namespace chemvise
