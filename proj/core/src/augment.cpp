#include "chemvise/augment.hpp"

#include <cmath>

#include "chemvise/error.hpp"

namespace chemvise {

void MixPolicy::validate() const {
  require(std::isfinite(lambda_min) && std::isfinite(lambda_max) && 0.0 <= lambda_min &&
              lambda_min <= lambda_max && lambda_max <= 1.0,
          ErrorKind::kConfig, "mix policy needs 0 <= lambda_min <= lambda_max <= 1");
  require(mix_probability >= 0.0 && mix_probability <= 1.0, ErrorKind::kConfig,
          "mix probability must lie in [0, 1]");
}

namespace {

// Entries where both endpoints agree are copied, so mixing a point with
// itself is exact rather than off by rounding.
Vector convex(const Vector& a, const Vector& b, double lambda) {
  const Vector blend = lambda * a + (1.0 - lambda) * b;
  return (a.array() == b.array()).select(a, blend);
}

}  // namespace

double sample_lambda(const MixPolicy& policy, Rng& rng) {
  if (policy.lambda_min == policy.lambda_max) {
    rng.discard(1);
    return policy.lambda_min;
  }
  std::uniform_real_distribution<double> uniform(policy.lambda_min, policy.lambda_max);
  return uniform(rng);
}

std::pair<Vector, Vector> mix_pair(const Vector& x_i, const Vector& y_i, const Vector& x_j,
                                   const Vector& y_j, double lambda) {
  require(x_i.size() == x_j.size(), ErrorKind::kDimension, "feature vectors differ in length");
  require(y_i.size() == y_j.size(), ErrorKind::kDimension, "target vectors differ in length");
  require(lambda >= 0.0 && lambda <= 1.0, ErrorKind::kConfig, "lambda must lie in [0, 1]");
  return {convex(x_i, x_j, lambda), convex(y_i, y_j, lambda)};
}

TrainingSample mix_samples(const TrainingSample& a, const TrainingSample& b, double lambda) {
  auto [x, y] = mix_pair(a.features, a.target, b.features, b.target, lambda);
  return TrainingSample{std::move(x), std::move(y), a.positive || b.positive};
}

std::vector<TrainingSample> augment_batch(const std::vector<TrainingSample>& batch,
                                          const MixPolicy& policy, Rng& rng,
                                          Diagnostics* diagnostics) {
  policy.validate();
  if (batch.size() < 2 || policy.mix_probability == 0.0) {
    if (batch.size() == 1 && policy.mix_probability > 0.0 && diagnostics) {
      diagnostics->warn("batch of one cannot be mixed; passed through");
    }
    return batch;
  }
  std::vector<TrainingSample> out;
  out.reserve(batch.size());
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> partner(0, batch.size() - 2);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (coin(rng) >= policy.mix_probability) {
      out.push_back(batch[i]);
      continue;
    }
    std::size_t j = partner(rng);
    if (j >= i) ++j;  // skip self
    const double lambda = sample_lambda(policy, rng);
    out.push_back(mix_samples(batch[i], batch[j], lambda));
  }
  return out;
}

bool binary_label_of_mix(const AnalyteMix& first, const AnalyteMix& second, double lambda,
                         std::string_view target_analyte, const MixPolicy& policy) {
  require(lambda >= policy.lambda_min && lambda <= policy.lambda_max, ErrorKind::kConfig,
          "lambda outside the policy bounds");
  return first.contains(target_analyte) || second.contains(target_analyte);
}

}  // namespace chemvise
