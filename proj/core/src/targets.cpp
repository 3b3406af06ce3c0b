#include "chemvise/targets.hpp"

#include <Eigen/QR>

#include <cmath>
#include <set>
#include <sstream>

#include "chemvise/csv.hpp"
#include "chemvise/error.hpp"

namespace chemvise {

std::string_view to_string(TargetKind kind) {
  switch (kind) {
    case TargetKind::kSemantic: return "semantic";
    case TargetKind::kOneHot: return "onehot";
    case TargetKind::kSimplex: return "simplex";
  }
  return "unknown";
}

TargetKind parse_target_kind(std::string_view text) {
  if (text == "semantic") return TargetKind::kSemantic;
  if (text == "onehot" || text == "one_hot" || text == "one-hot") return TargetKind::kOneHot;
  if (text == "simplex") return TargetKind::kSimplex;
  raise(ErrorKind::kConfig, "unknown target space kind '" + std::string(text) + "'");
}

TargetSpace::TargetSpace(TargetKind kind, int dimension, std::vector<std::string> analytes,
                         std::vector<Vector> vectors)
    : kind_(kind), dimension_(dimension), analytes_(std::move(analytes)), vectors_(std::move(vectors)) {
  require(dimension_ >= 1, ErrorKind::kConfig, "target dimension must be positive");
  require(analytes_.size() == vectors_.size(), ErrorKind::kDimension,
          "analyte and vector counts differ");
  std::set<std::string> seen;
  for (std::size_t i = 0; i < analytes_.size(); ++i) {
    require(seen.insert(analytes_[i]).second, ErrorKind::kConfig,
            "duplicate analyte '" + analytes_[i] + "' in target space");
    require(vectors_[i].size() == dimension_, ErrorKind::kDimension,
            "vector for " + analytes_[i] + " has length " + std::to_string(vectors_[i].size()));
    require(vectors_[i].allFinite(), ErrorKind::kNumeric,
            "vector for " + analytes_[i] + " has non-finite entries");
  }
}

bool TargetSpace::contains(std::string_view analyte) const {
  for (const auto& a : analytes_) {
    if (a == analyte) return true;
  }
  return false;
}

const Vector& TargetSpace::at(std::string_view analyte) const {
  for (std::size_t i = 0; i < analytes_.size(); ++i) {
    if (analytes_[i] == analyte) return vectors_[i];
  }
  raise(ErrorKind::kLookup, "analyte '" + std::string(analyte) + "' not in target space");
}

TargetSpace build_one_hot(const std::vector<std::string>& analytes, int dimension) {
  require(dimension >= 1, ErrorKind::kConfig, "target dimension must be positive");
  require(analytes.size() <= static_cast<std::size_t>(dimension), ErrorKind::kCapacity,
          std::to_string(analytes.size()) + " analytes do not fit a one-hot space of dimension " +
              std::to_string(dimension));
  std::vector<Vector> vectors;
  for (std::size_t k = 0; k < analytes.size(); ++k) {
    vectors.push_back(Vector::Unit(dimension, static_cast<Eigen::Index>(k)));
  }
  return TargetSpace(TargetKind::kOneHot, dimension, analytes, std::move(vectors));
}

namespace {

// d x k matrix with orthonormal columns, from the QR of a seeded gaussian.
Matrix random_orthonormal_columns(int rows, int cols, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd g(rows, cols);
  for (int j = 0; j < cols; ++j) {
    for (int i = 0; i < rows; ++i) g(i, j) = normal(rng);
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(rows, cols);
  // Fix column signs so the factorisation is unique given the draw.
  const Eigen::MatrixXd r = qr.matrixQR().topRows(cols).triangularView<Eigen::Upper>();
  for (int j = 0; j < cols; ++j) {
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  }
  return q;
}

}  // namespace

TargetSpace build_simplex(const std::vector<std::string>& analytes, int dimension,
                          std::uint64_t seed) {
  require(dimension >= 1, ErrorKind::kConfig, "target dimension must be positive");
  const int n = static_cast<int>(analytes.size());
  require(n <= dimension + 1, ErrorKind::kCapacity,
          std::to_string(n) + " equidistant points do not fit dimension " +
              std::to_string(dimension));
  std::vector<Vector> vectors;
  if (n == 0) return TargetSpace(TargetKind::kSimplex, dimension, analytes, {});
  if (n == 1) {
    vectors.push_back(random_orthonormal_columns(dimension, 1, seed).col(0));
    return TargetSpace(TargetKind::kSimplex, dimension, analytes, std::move(vectors));
  }

  // Centred, normalised standard basis of R^n: unit vectors with pairwise
  // inner product -1/(n-1), all orthogonal to (1,...,1).
  const Eigen::MatrixXd centred =
      (Eigen::MatrixXd::Identity(n, n) - Eigen::MatrixXd::Constant(n, n, 1.0 / n)) *
      std::sqrt(static_cast<double>(n) / (n - 1));
  // Orthonormal basis of the hyperplane orthogonal to (1,...,1).
  Eigen::MatrixXd ones_first(n, n);
  ones_first.setIdentity();
  ones_first.col(0).setConstant(1.0);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(ones_first);
  const Eigen::MatrixXd q = qr.householderQ();
  const Eigen::MatrixXd hyperplane = q.rightCols(n - 1);
  // Coordinates in R^{n-1}; row k is analyte k.
  const Eigen::MatrixXd coords = centred * hyperplane;
  const Matrix rotation = random_orthonormal_columns(dimension, n - 1, seed);
  for (int k = 0; k < n; ++k) {
    Vector v = rotation * coords.row(k).transpose();
    v /= v.norm();
    vectors.push_back(std::move(v));
  }
  return TargetSpace(TargetKind::kSimplex, dimension, analytes, std::move(vectors));
}

TargetSpace gen_synthetic_semantic(const std::vector<std::string>& analytes, int dimension,
                                   int n_clusters, double cluster_spread, std::uint64_t seed,
                                   const std::optional<std::vector<int>>& cluster_of) {
  const int n = static_cast<int>(analytes.size());
  require(dimension >= 1, ErrorKind::kConfig, "target dimension must be positive");
  require(n_clusters >= 1 && n_clusters <= n, ErrorKind::kConfig,
          "cluster count must lie in [1, analyte count]");
  require(n_clusters <= dimension, ErrorKind::kCapacity,
          "more clusters than orthogonal directions");
  require(cluster_spread > 0.0 && std::isfinite(cluster_spread), ErrorKind::kConfig,
          "cluster spread must be positive");

  std::vector<int> assignment(static_cast<std::size_t>(n));
  if (cluster_of) {
    require(cluster_of->size() == analytes.size(), ErrorKind::kConfig,
            "cluster assignment must list one cluster per analyte");
    assignment = *cluster_of;
    for (int c : assignment) {
      require(c >= 0 && c < n_clusters, ErrorKind::kConfig, "cluster index out of range");
    }
  } else {
    for (int k = 0; k < n; ++k) assignment[static_cast<std::size_t>(k)] = std::min(k, n_clusters - 1);
  }

  const Matrix centroids = random_orthonormal_columns(dimension, n_clusters, derive_seed(seed, 1));
  Rng rng(derive_seed(seed, 2));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Vector> vectors;
  for (int k = 0; k < n; ++k) {
    Vector v = centroids.col(assignment[static_cast<std::size_t>(k)]);
    for (int i = 0; i < dimension; ++i) v[i] += cluster_spread * normal(rng);
    v /= v.norm();
    vectors.push_back(std::move(v));
  }
  return TargetSpace(TargetKind::kSemantic, dimension, analytes, std::move(vectors));
}

TargetSpace load_semantic(const std::filesystem::path& path) {
  const csv::Table table = csv::read_table(path);
  require(table.header.size() >= 2 && table.header[0] == "analyte_id", ErrorKind::kParse,
          path.string() + " line 1: header must start with analyte_id followed by v0..v{d-1}");
  const int dimension = static_cast<int>(table.header.size()) - 1;
  for (int i = 0; i < dimension; ++i) {
    require(table.header[static_cast<std::size_t>(i) + 1] == "v" + std::to_string(i),
            ErrorKind::kParse,
            path.string() + " line 1: expected column v" + std::to_string(i));
  }
  std::vector<std::string> analytes;
  std::vector<Vector> vectors;
  std::set<std::string> seen;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::size_t line = table.line_numbers[r];
    require(!row[0].empty(), ErrorKind::kParse,
            path.string() + " line " + std::to_string(line) + ": empty analyte id");
    require(seen.insert(row[0]).second, ErrorKind::kParse,
            path.string() + " line " + std::to_string(line) + ": duplicate analyte id '" +
                row[0] + "'");
    Vector v(dimension);
    for (int i = 0; i < dimension; ++i) {
      v[i] = csv::parse_double(row[static_cast<std::size_t>(i) + 1], line,
                               "v" + std::to_string(i));
    }
    analytes.push_back(row[0]);
    vectors.push_back(std::move(v));
  }
  return TargetSpace(TargetKind::kSemantic, dimension, std::move(analytes), std::move(vectors));
}

void save_semantic(const TargetSpace& space, const std::filesystem::path& path) {
  std::ostringstream out;
  out << "analyte_id";
  for (int i = 0; i < space.dimension(); ++i) out << ",v" << i;
  out << '\n';
  for (std::size_t k = 0; k < space.size(); ++k) {
    out << space.analytes()[k];
    const Vector& v = space.vectors()[k];
    for (int i = 0; i < space.dimension(); ++i) out << ',' << csv::format_double(v[i]);
    out << '\n';
  }
  csv::write_file(path, out.str());
}

Vector mixture_target(const TargetSpace& space, const AnalyteMix& mix) {
  mix.validate();
  if (mix.is_single()) return space.at(mix.components[0].analyte);
  const auto& a = mix.components[0];
  const auto& b = mix.components[1];
  const double lambda = a.concentration / (a.concentration + b.concentration);
  return lambda * space.at(a.analyte) + (1.0 - lambda) * space.at(b.analyte);
}

}  // namespace chemvise
