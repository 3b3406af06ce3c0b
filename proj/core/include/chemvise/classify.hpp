#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "chemvise/common.hpp"

namespace chemvise {

struct LinearSVCModel {
  Vector weight;
  double bias = 0.0;
  double c_penalty = 1.0;
  double class_weight_ratio = 1.0;
};

struct SVCOptions {
  long iterations = 50'000;
};

// Minimises 0.5*|w|^2 + C * sum_i omega_i * hinge(y_i, w.x_i + b), with
// omega_i = class_weight_ratio for positives and 1 otherwise. Stochastic
// projected subgradient steps of size 1/t over seeded epoch shuffles; the
// returned parameters average the second half of the iterates.
// Rows of X are samples.
LinearSVCModel train_linear_svc(const Matrix& X, const std::vector<bool>& y, double c_penalty,
                                double class_weight_ratio, std::uint64_t seed,
                                const SVCOptions& options = {});

double svc_decision(const LinearSVCModel& model, const Vector& x);
// Strictly positive decision value -> positive; the boundary is negative.
bool svc_predict(const LinearSVCModel& model, const Vector& x);

// Majority vote of the k nearest rows of `train` (Euclidean); equal
// distances resolve toward the lower row index. k must be odd.
bool knn_predict(const Matrix& train, const std::vector<bool>& labels, const Vector& query, int k);

struct PCAModel {
  Vector mean;
  Matrix components;  // [n_components x d], orthonormal rows
  Vector explained_variance;
  double total_variance = 0.0;
};

// Eigen-decomposition of the sample covariance by cyclic Jacobi. When there
// are fewer samples than dimensions the n x n Gram matrix is decomposed
// instead and mapped back. Each component's largest-magnitude entry is
// made positive.
PCAModel pca_fit(const Matrix& X, int n_components = 2);
Vector pca_transform(const PCAModel& model, const Vector& x);
Matrix pca_transform(const PCAModel& model, const Matrix& X);

struct JacobiResult {
  Vector eigenvalues;         // descending
  Eigen::MatrixXd eigenvectors;  // columns, matching eigenvalues
  int sweeps = 0;
};

// Cyclic Jacobi rotations until the off-diagonal Frobenius norm falls below
// 1e-12 relative to the matrix norm.
JacobiResult jacobi_eigen(const Eigen::MatrixXd& symmetric, int max_sweeps = 100);

struct ConfusionCounts {
  long tp = 0;
  long fp = 0;
  long tn = 0;
  long fn = 0;

  long total() const { return tp + fp + tn + fn; }
  bool operator==(const ConfusionCounts&) const = default;
};

ConfusionCounts confusion(const std::vector<bool>& predictions, const std::vector<bool>& labels);

// Matthews correlation; 0 when any marginal is empty.
double mcc(const ConfusionCounts& counts);
double accuracy(const ConfusionCounts& counts);

}  // namespace chemvise
