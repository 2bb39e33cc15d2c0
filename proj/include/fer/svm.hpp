#pragma once

#include <span>

#include "fer/error.hpp"
#include "fer/subspace.hpp"

namespace fer {

struct SvmParams {
  double c = 10.0;
  /// RBF width; <= 0 selects 1 / feature dimension.
  double gamma = 0.0;
  /// KKT tolerance on the maximal violating pair.
  double tol = 1e-3;
  /// Working-set sweeps (one sweep = N pair updates); <= 0 selects 10 * N.
  long max_passes = 0;
};

/// exp(-gamma * |a - b|^2)
double rbf_kernel(const Vector& a, const Vector& b, double gamma);

/// Trained soft-margin RBF SVM in dual form:
///   f(x) = sum_i coef_i * exp(-gamma |x - sv_i|^2) + bias, coef_i = alpha_i y_i.
struct BinarySvm {
  Matrix support;  // rows are support vectors
  Vector coef;
  double bias = 0.0;
  double gamma = 1.0;
  double c = 1.0;

  Eigen::Index dim() const { return support.cols(); }
  double decision(const Vector& x) const;
};

struct SvmFit {
  BinarySvm model;
  Vector alpha;  // one per training sample
  long iterations = 0;
  double violation = 0.0;  // final maximal KKT violation (m - M gap)
};

class ConvergenceError : public NumericError {
 public:
  ConvergenceError(const std::string& what, double violation) : NumericError(what), violation_(violation) {}
  double violation() const noexcept { return violation_; }

 private:
  double violation_;
};

/// SMO with second-order working-set selection. Labels must be +1/-1 and
/// both present (DataError otherwise). Throws ConvergenceError when the
/// iteration budget runs out.
SvmFit svm_train(const Matrix& samples, std::span<const int> labels, const SvmParams& params = {});

}  // namespace fer
