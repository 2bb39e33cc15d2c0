#include "fer/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace fer {

double rbf_kernel(const Vector& a, const Vector& b, double gamma) { return std::exp(-gamma * (a - b).squaredNorm()); }

double BinarySvm::decision(const Vector& x) const {
  if (x.size() != support.cols()) throw std::invalid_argument("SVM input dimension mismatch");
  double f = bias;
  for (Eigen::Index i = 0; i < support.rows(); ++i)
    f += coef(i) * std::exp(-gamma * (support.row(i).transpose() - x).squaredNorm());
  return f;
}

SvmFit svm_train(const Matrix& x, std::span<const int> labels, const SvmParams& params) {
  const Eigen::Index n = x.rows();
  if (static_cast<Eigen::Index>(labels.size()) != n) throw std::invalid_argument("label count mismatch");
  bool pos = false, neg = false;
  for (int l : labels) {
    if (l != 1 && l != -1) throw DataError("SVM labels must be +1 or -1");
    (l > 0 ? pos : neg) = true;
  }
  if (!pos || !neg) throw DataError("SVM training needs both classes");

  const double c = params.c;
  const double gamma = params.gamma > 0 ? params.gamma : 1.0 / static_cast<double>(std::max<Eigen::Index>(1, x.cols()));
  const double tau = 1e-12;
  Vector y(n);
  for (Eigen::Index i = 0; i < n; ++i) y(i) = labels[static_cast<std::size_t>(i)];

  Matrix k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    k(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < n; ++j) k(i, j) = k(j, i) = rbf_kernel(x.row(i), x.row(j), gamma);
  }

  Vector alpha = Vector::Zero(n);
  Vector grad = Vector::Constant(n, -1.0);
  const long passes = params.max_passes > 0 ? params.max_passes : 10 * static_cast<long>(n);
  const long max_iter = passes * static_cast<long>(n);

  auto in_up = [&](Eigen::Index t) { return (y(t) > 0 && alpha(t) < c) || (y(t) < 0 && alpha(t) > 0); };
  auto in_low = [&](Eigen::Index t) { return (y(t) > 0 && alpha(t) > 0) || (y(t) < 0 && alpha(t) < c); };

  long iter = 0;
  double gap = 0.0;
  for (;; ++iter) {
    // i: maximal -y G over I_up.
    Eigen::Index i = -1;
    double gmax = -std::numeric_limits<double>::infinity();
    for (Eigen::Index t = 0; t < n; ++t)
      if (in_up(t) && -y(t) * grad(t) > gmax) {
        gmax = -y(t) * grad(t);
        i = t;
      }
    // j: second-order choice over I_low; track min -y G for the stop test.
    Eigen::Index j = -1;
    double gmin = std::numeric_limits<double>::infinity();
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index t = 0; t < n; ++t) {
      if (!in_low(t)) continue;
      const double v = -y(t) * grad(t);
      gmin = std::min(gmin, v);
      if (i < 0 || v >= gmax) continue;
      const double b = gmax - v;
      double a = k(i, i) + k(t, t) - 2.0 * k(i, t);
      if (a <= 0) a = tau;
      const double obj = -(b * b) / a;
      if (obj < best) {
        best = obj;
        j = t;
      }
    }
    gap = gmax - gmin;
    if (i < 0 || j < 0 || gap < params.tol) break;
    if (iter >= max_iter)
      throw ConvergenceError("SMO did not converge; KKT violation " + std::to_string(gap), gap);

    const double ai = alpha(i), aj = alpha(j);
    const double qij = y(i) * y(j) * k(i, j);
    if (y(i) != y(j)) {
      double quad = k(i, i) + k(j, j) + 2.0 * qij;
      if (quad <= 0) quad = tau;
      const double delta = (-grad(i) - grad(j)) / quad;
      const double diff = alpha(i) - alpha(j);
      alpha(i) += delta;
      alpha(j) += delta;
      if (diff > 0) {
        if (alpha(j) < 0) {
          alpha(j) = 0;
          alpha(i) = diff;
        }
      } else if (alpha(i) < 0) {
        alpha(i) = 0;
        alpha(j) = -diff;
      }
      if (diff > 0) {
        if (alpha(i) > c) {
          alpha(i) = c;
          alpha(j) = c - diff;
        }
      } else if (alpha(j) > c) {
        alpha(j) = c;
        alpha(i) = c + diff;
      }
    } else {
      double quad = k(i, i) + k(j, j) - 2.0 * qij;
      if (quad <= 0) quad = tau;
      const double delta = (grad(i) - grad(j)) / quad;
      const double sum = alpha(i) + alpha(j);
      alpha(i) -= delta;
      alpha(j) += delta;
      if (sum > c) {
        if (alpha(i) > c) {
          alpha(i) = c;
          alpha(j) = sum - c;
        }
      } else if (alpha(j) < 0) {
        alpha(j) = 0;
        alpha(i) = sum;
      }
      if (sum > c) {
        if (alpha(j) > c) {
          alpha(j) = c;
          alpha(i) = sum - c;
        }
      } else if (alpha(i) < 0) {
        alpha(i) = 0;
        alpha(j) = sum;
      }
    }
    const double di = alpha(i) - ai, dj = alpha(j) - aj;
    for (Eigen::Index t = 0; t < n; ++t)
      grad(t) += y(t) * (y(i) * k(t, i) * di + y(j) * k(t, j) * dj);
  }

  // Offset: average over free vectors, else the midpoint of the feasible range.
  double ub = std::numeric_limits<double>::infinity(), lb = -ub, sum_free = 0;
  int n_free = 0;
  for (Eigen::Index t = 0; t < n; ++t) {
    const double yg = y(t) * grad(t);
    if (alpha(t) >= c) {
      if (y(t) < 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else if (alpha(t) <= 0) {
      if (y(t) > 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else {
      ++n_free;
      sum_free += yg;
    }
  }
  const double rho = n_free > 0 ? sum_free / n_free : (ub + lb) / 2.0;

  SvmFit fit;
  fit.alpha = alpha;
  fit.iterations = iter;
  fit.violation = gap;
  BinarySvm& m = fit.model;
  m.bias = -rho;
  m.gamma = gamma;
  m.c = c;
  const auto nsv = static_cast<Eigen::Index>((alpha.array() > 0).count());
  m.support.resize(nsv, x.cols());
  m.coef.resize(nsv);
  for (Eigen::Index t = 0, r = 0; t < n; ++t)
    if (alpha(t) > 0) {
      m.support.row(r) = x.row(t);
      m.coef(r++) = alpha(t) * y(t);
    }
  return fit;
}

}  // namespace fer
