#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

namespace fer {

/// Rows are samples.
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct PcaModel {
  Vector mean;         // d_in
  Matrix components;   // d_in x k, orthonormal columns, descending eigenvalue
  Vector eigenvalues;  // k, non-increasing, >= 0

  Eigen::Index input_dim() const { return mean.size(); }
  Eigen::Index output_dim() const { return components.cols(); }
  Vector project(const Vector& x) const;
  Matrix project_rows(const Matrix& x) const;
  Vector reconstruct(const Vector& z) const;
};

struct PcaOptions {
  double energy = 0.95;
  int max_components = 64;
  /// Caps the component count at N - n_classes so the within-class scatter
  /// of the projected data stays invertible.
  int n_classes = 1;
};

/// Throws NumericError when the samples have no variance.
PcaModel pca_fit(const Matrix& samples, const PcaOptions& options = {});

struct LdaModel {
  Matrix projection;         // d x m, m <= n_classes - 1, unit columns
  Vector eigenvalues;        // m generalized eigenvalues, descending
  std::vector<int> classes;  // ascending
  Matrix class_means;        // m x n_classes, in projected space

  Vector project(const Vector& x) const { return projection.transpose() * x; }
};

/// Per-class unbiased within-class scatter and count-weighted between-class
/// scatter.
struct Scatter {
  Matrix within;
  Matrix between;
};
Scatter scatter_matrices(const Matrix& samples, std::span<const int> labels);

/// Fisher discriminant via the generalized symmetric eigenproblem
/// S_b v = lambda S_w v. S_w is regularized only when it is not safely
/// positive definite. Needs >= 2 classes with >= 2 samples each.
LdaModel lda_fit(const Matrix& samples, std::span<const int> labels);

struct PcaLdaModel {
  PcaModel pca;
  LdaModel lda;
};

PcaLdaModel pca_lda_fit(const Matrix& samples, std::span<const int> labels, const PcaOptions& options = {});

/// Nearest class mean in the discriminant space; ties go to the lower label.
int pca_lda_classify(const PcaLdaModel& model, const Vector& x);

/// Flips each column so its largest-magnitude entry is positive.
void canonical_signs(Matrix& columns);

}  // namespace fer
