#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "chemvise/common.hpp"
#include "chemvise/signals.hpp"

namespace chemvise {

enum class TargetKind { kSemantic, kOneHot, kSimplex };

std::string_view to_string(TargetKind kind);
// Accepts "semantic", "onehot"/"one_hot", "simplex".
TargetKind parse_target_kind(std::string_view text);

// Analyte id -> representation vector. Entry order is the enumeration order
// the space was built with.
class TargetSpace {
 public:
  TargetSpace(TargetKind kind, int dimension, std::vector<std::string> analytes,
              std::vector<Vector> vectors);

  TargetKind kind() const { return kind_; }
  int dimension() const { return dimension_; }
  std::size_t size() const { return analytes_.size(); }
  const std::vector<std::string>& analytes() const { return analytes_; }
  const std::vector<Vector>& vectors() const { return vectors_; }

  bool contains(std::string_view analyte) const;
  const Vector& at(std::string_view analyte) const;  // raises kLookup

 private:
  TargetKind kind_;
  int dimension_;
  std::vector<std::string> analytes_;
  std::vector<Vector> vectors_;
};

TargetSpace build_one_hot(const std::vector<std::string>& analytes, int dimension);

// Regular simplex centred at the origin, embedded in the first n-1
// coordinates and rotated by a seeded random orthogonal transform.
TargetSpace build_simplex(const std::vector<std::string>& analytes, int dimension,
                          std::uint64_t seed);

// Clustered stand-in for pretrained chemistry embeddings. Unless
// `cluster_of` is given, analyte k joins cluster min(k, n_clusters - 1), so
// the first n_clusters - 1 analytes sit alone and the rest share a cluster.
TargetSpace gen_synthetic_semantic(const std::vector<std::string>& analytes, int dimension,
                                   int n_clusters, double cluster_spread, std::uint64_t seed,
                                   const std::optional<std::vector<int>>& cluster_of = std::nullopt);

// Embedding CSV: header `analyte_id,v0,...,v{d-1}`, one row per analyte.
TargetSpace load_semantic(const std::filesystem::path& path);
void save_semantic(const TargetSpace& space, const std::filesystem::path& path);

// Single: the analyte's vector. Pair: lambda*y_a + (1-lambda)*y_b with
// lambda = c_a / (c_a + c_b).
Vector mixture_target(const TargetSpace& space, const AnalyteMix& mix);

}  // namespace chemvise
