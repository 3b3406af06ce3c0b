#include "chemvise/classify.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "chemvise/error.hpp"

namespace chemvise {

LinearSVCModel train_linear_svc(const Matrix& X, const std::vector<bool>& y, double c_penalty,
                                double class_weight_ratio, std::uint64_t seed,
                                const SVCOptions& options) {
  const auto n = static_cast<std::size_t>(X.rows());
  require(n == y.size(), ErrorKind::kDimension, "sample and label counts differ");
  require(c_penalty > 0.0 && std::isfinite(c_penalty), ErrorKind::kConfig, "C must be positive");
  require(class_weight_ratio >= 1.0 && std::isfinite(class_weight_ratio), ErrorKind::kConfig,
          "class weight ratio must be >= 1");
  require(options.iterations >= 1, ErrorKind::kConfig, "SVC needs at least one iteration");
  require(X.allFinite(), ErrorKind::kNumeric, "SVC inputs contain NaN or Inf");
  const auto positives = static_cast<std::size_t>(std::count(y.begin(), y.end(), true));
  require(positives > 0 && positives < n, ErrorKind::kDegenerate,
          "linear SVC needs samples of both classes");

  const Eigen::Index d = X.cols();
  const double total_weight =
      class_weight_ratio * static_cast<double>(positives) + static_cast<double>(n - positives);
  // The optimum satisfies 0.5|w|^2 <= f(0, 0) = C * total_weight.
  const double radius = std::sqrt(2.0 * c_penalty * total_weight);
  const double scale = c_penalty * static_cast<double>(n);

  Vector w = Vector::Zero(d);
  double b = 0.0;
  Vector w_avg = Vector::Zero(d);
  double b_avg = 0.0;
  long averaged = 0;
  const long average_from = options.iterations / 2;

  Rng rng(seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t cursor = n;
  for (long t = 1; t <= options.iterations; ++t) {
    if (cursor == n) {
      std::shuffle(order.begin(), order.end(), rng);
      cursor = 0;
    }
    const std::size_t i = order[cursor++];
    const double label = y[i] ? 1.0 : -1.0;
    const double omega = y[i] ? class_weight_ratio : 1.0;
    const double eta = 1.0 / static_cast<double>(t);
    const double margin = label * (X.row(static_cast<Eigen::Index>(i)).dot(w) + b);
    w *= (1.0 - eta);
    if (margin < 1.0) {
      const double push = eta * scale * omega * label;
      w.noalias() += push * X.row(static_cast<Eigen::Index>(i)).transpose();
      b += push;
    }
    const double norm = w.norm();
    if (norm > radius) w *= radius / norm;
    if (t > average_from) {
      ++averaged;
      const double k = 1.0 / static_cast<double>(averaged);
      w_avg += k * (w - w_avg);
      b_avg += k * (b - b_avg);
    }
  }
  LinearSVCModel model;
  model.weight = std::move(w_avg);
  model.bias = b_avg;
  model.c_penalty = c_penalty;
  model.class_weight_ratio = class_weight_ratio;
  require(model.weight.allFinite() && std::isfinite(model.bias), ErrorKind::kNumeric,
          "SVC parameters became non-finite");
  return model;
}

double svc_decision(const LinearSVCModel& model, const Vector& x) {
  require(x.size() == model.weight.size(), ErrorKind::kDimension,
          "SVC expects " + std::to_string(model.weight.size()) + " features, got " +
              std::to_string(x.size()));
  return model.weight.dot(x) + model.bias;
}

bool svc_predict(const LinearSVCModel& model, const Vector& x) {
  return svc_decision(model, x) > 0.0;
}

bool knn_predict(const Matrix& train, const std::vector<bool>& labels, const Vector& query, int k) {
  const auto n = static_cast<std::size_t>(train.rows());
  require(n > 0, ErrorKind::kDegenerate, "KNN needs a non-empty training set");
  require(labels.size() == n, ErrorKind::kDimension, "sample and label counts differ");
  require(query.size() == train.cols(), ErrorKind::kDimension, "query dimension mismatch");
  require(k >= 1 && k % 2 == 1, ErrorKind::kConfig, "k must be a positive odd integer");
  require(static_cast<std::size_t>(k) <= n, ErrorKind::kConfig, "k exceeds the training set size");

  std::vector<std::pair<double, std::size_t>> distances(n);
  for (std::size_t i = 0; i < n; ++i) {
    distances[i] = {(train.row(static_cast<Eigen::Index>(i)).transpose() - query).squaredNorm(), i};
  }
  const auto kth = distances.begin() + k;
  std::partial_sort(distances.begin(), kth, distances.end());
  int votes = 0;
  for (auto it = distances.begin(); it != kth; ++it) votes += labels[it->second] ? 1 : -1;
  return votes > 0;
}

JacobiResult jacobi_eigen(const Eigen::MatrixXd& symmetric, int max_sweeps) {
  require(symmetric.rows() == symmetric.cols(), ErrorKind::kDimension, "matrix must be square");
  const Eigen::Index n = symmetric.rows();
  Eigen::MatrixXd a = 0.5 * (symmetric + symmetric.transpose());
  Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);
  const double norm = a.norm();
  const double tolerance = 1e-12 * std::max(norm, std::numeric_limits<double>::min());

  auto off_diagonal = [&] {
    double sum = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index i = 0; i < n; ++i) {
        if (i != j) sum += a(i, j) * a(i, j);
      }
    }
    return std::sqrt(sum);
  };

  JacobiResult result;
  for (int sweep = 0; sweep < max_sweeps && off_diagonal() > tolerance; ++sweep) {
    result.sweeps = sweep + 1;
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (std::abs(apq) < std::numeric_limits<double>::min()) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        // A <- J^T A J with J the (p, q) rotation.
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index i, Eigen::Index j) { return a(i, i) > a(j, j); });
  result.eigenvalues.resize(n);
  result.eigenvectors.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    result.eigenvalues[k] = a(order[static_cast<std::size_t>(k)], order[static_cast<std::size_t>(k)]);
    result.eigenvectors.col(k) = v.col(order[static_cast<std::size_t>(k)]);
  }
  return result;
}

namespace {

void fix_sign(Eigen::Ref<Vector> component) {
  Eigen::Index arg = 0;
  component.cwiseAbs().maxCoeff(&arg);
  if (component[arg] < 0.0) component = -component;
}

}  // namespace

PCAModel pca_fit(const Matrix& X, int n_components) {
  const Eigen::Index n = X.rows();
  const Eigen::Index d = X.cols();
  require(n >= 2, ErrorKind::kDegenerate, "PCA needs at least two samples");
  require(n_components >= 1 && n_components <= d, ErrorKind::kConfig,
          "component count must lie in [1, dimension]");
  require(X.allFinite(), ErrorKind::kNumeric, "PCA inputs contain NaN or Inf");

  PCAModel model;
  model.mean = X.colwise().mean().transpose();
  const Eigen::MatrixXd centred = X.rowwise() - model.mean.transpose();
  const double denom = static_cast<double>(n - 1);
  model.total_variance = centred.squaredNorm() / denom;
  require(model.total_variance > 1e-300, ErrorKind::kDegenerate, "PCA input has zero variance");

  model.components.resize(n_components, d);
  model.explained_variance.resize(n_components);
  if (d <= n) {
    const JacobiResult eig = jacobi_eigen(centred.transpose() * centred / denom);
    for (int k = 0; k < n_components; ++k) {
      model.explained_variance[k] = std::max(0.0, eig.eigenvalues[k]);
      model.components.row(k) = eig.eigenvectors.col(k).transpose();
    }
  } else {
    // Covariance eigenvectors are X^T u / sqrt(denom * mu) for Gram eigenpairs (mu, u).
    const JacobiResult eig = jacobi_eigen(centred * centred.transpose() / denom);
    const double floor = 1e-12 * model.total_variance;
    for (int k = 0; k < n_components; ++k) {
      const double mu = k < eig.eigenvalues.size() ? eig.eigenvalues[k] : 0.0;
      Vector v;
      if (mu > floor) {
        v = centred.transpose() * eig.eigenvectors.col(k) / std::sqrt(denom * mu);
      } else {
        // No variance left: any unit vector orthogonal to earlier components.
        v = Vector::Zero(d);
        for (Eigen::Index axis = 0; axis < d; ++axis) {
          Vector candidate = Vector::Unit(d, axis);
          for (int j = 0; j < k; ++j) {
            candidate -= model.components.row(j).dot(candidate) * model.components.row(j).transpose();
          }
          if (candidate.norm() > 1e-6) {
            v = candidate;
            break;
          }
        }
      }
      for (int j = 0; j < k; ++j) v -= model.components.row(j).dot(v) * model.components.row(j).transpose();
      v /= v.norm();
      model.components.row(k) = v.transpose();
      model.explained_variance[k] = std::max(0.0, mu > floor ? mu : 0.0);
    }
  }
  for (int k = 0; k < n_components; ++k) {
    Vector row = model.components.row(k).transpose();
    fix_sign(row);
    model.components.row(k) = row.transpose();
  }
  return model;
}

Vector pca_transform(const PCAModel& model, const Vector& x) {
  require(x.size() == model.mean.size(), ErrorKind::kDimension, "PCA input dimension mismatch");
  return model.components * (x - model.mean);
}

Matrix pca_transform(const PCAModel& model, const Matrix& X) {
  require(X.cols() == model.mean.size(), ErrorKind::kDimension, "PCA input dimension mismatch");
  return (X.rowwise() - model.mean.transpose()) * model.components.transpose();
}

ConfusionCounts confusion(const std::vector<bool>& predictions, const std::vector<bool>& labels) {
  require(predictions.size() == labels.size(), ErrorKind::kDimension,
          "prediction and label counts differ");
  ConfusionCounts counts;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (predictions[i]) {
      labels[i] ? ++counts.tp : ++counts.fp;
    } else {
      labels[i] ? ++counts.fn : ++counts.tn;
    }
  }
  return counts;
}

double mcc(const ConfusionCounts& c) {
  const double tp = static_cast<double>(c.tp);
  const double fp = static_cast<double>(c.fp);
  const double tn = static_cast<double>(c.tn);
  const double fn = static_cast<double>(c.fn);
  const double denominator = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
  if (denominator == 0.0) return 0.0;
  const double value = (tp * tn - fp * fn) / std::sqrt(denominator);
  return std::clamp(value, -1.0, 1.0);
}

double accuracy(const ConfusionCounts& c) {
  const long total = c.total();
  return total == 0 ? 0.0 : static_cast<double>(c.tp + c.tn) / static_cast<double>(total);
}

}  // namespace chemvise
