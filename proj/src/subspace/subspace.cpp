#include "fer/subspace.hpp"

#include <algorithm>
#include <map>

#include "fer/error.hpp"

namespace fer {

void canonical_signs(Matrix& columns) {
  for (Eigen::Index j = 0; j < columns.cols(); ++j) {
    Eigen::Index arg = 0;
    columns.col(j).cwiseAbs().maxCoeff(&arg);
    if (columns(arg, j) < 0) columns.col(j) *= -1.0;
  }
}

Vector PcaModel::project(const Vector& x) const {
  if (x.size() != mean.size()) throw std::invalid_argument("PCA input dimension mismatch");
  return components.transpose() * (x - mean);
}

Matrix PcaModel::project_rows(const Matrix& x) const {
  if (x.cols() != mean.size()) throw std::invalid_argument("PCA input dimension mismatch");
  return (x.rowwise() - mean.transpose()) * components;
}

Vector PcaModel::reconstruct(const Vector& z) const { return mean + components * z; }

PcaModel pca_fit(const Matrix& samples, const PcaOptions& opt) {
  const Eigen::Index n = samples.rows();
  const Eigen::Index d = samples.cols();
  if (n < 2) throw NumericError("PCA needs at least two samples");

  PcaModel m;
  m.mean = samples.colwise().mean().transpose();
  const Matrix centered = samples.rowwise() - m.mean.transpose();

  // Eigen-decompose whichever of the covariance (d x d) and the Gram matrix
  // (n x n) is smaller; both share the non-zero spectrum.
  Vector evals;
  Matrix evecs;
  const bool gram = n < d;
  {
    const Matrix cov = gram ? Matrix(centered * centered.transpose() / double(n - 1))
                            : Matrix(centered.transpose() * centered / double(n - 1));
    Eigen::SelfAdjointEigenSolver<Matrix> es(cov);
    if (es.info() != Eigen::Success) throw NumericError("PCA eigen-decomposition failed");
    evals = es.eigenvalues().reverse().cwiseMax(0.0);
    evecs = es.eigenvectors().rowwise().reverse();
  }

  const double total = evals.sum();
  if (!(total > 0.0)) throw NumericError("PCA: samples have zero variance");

  // Keep only numerically non-zero directions.
  Eigen::Index rank = 0;
  while (rank < evals.size() && evals(rank) > 1e-12 * evals(0)) ++rank;

  Eigen::Index k = 0;
  double acc = 0.0;
  while (k < rank) {
    acc += evals(k++);
    if (acc >= opt.energy * total) break;
  }
  const Eigen::Index cap = std::min<Eigen::Index>(opt.max_components, n - opt.n_classes);
  k = std::max<Eigen::Index>(1, std::min({k, cap, rank}));

  if (gram) {
    m.components = centered.transpose() * evecs.leftCols(k);
    for (Eigen::Index j = 0; j < k; ++j) m.components.col(j).normalize();
  } else {
    m.components = evecs.leftCols(k);
  }
  canonical_signs(m.components);
  m.eigenvalues = evals.head(k);
  return m;
}

Scatter scatter_matrices(const Matrix& x, std::span<const int> labels) {
  if (static_cast<Eigen::Index>(labels.size()) != x.rows()) throw std::invalid_argument("label count mismatch");
  const Eigen::Index d = x.cols();
  std::map<int, std::vector<Eigen::Index>> groups;
  for (Eigen::Index i = 0; i < x.rows(); ++i) groups[labels[static_cast<std::size_t>(i)]].push_back(i);

  const Vector grand = x.colwise().mean().transpose();
  Scatter s{Matrix::Zero(d, d), Matrix::Zero(d, d)};
  for (const auto& [label, idx] : groups) {
    const auto ni = static_cast<Eigen::Index>(idx.size());
    Matrix xi(ni, d);
    for (Eigen::Index r = 0; r < ni; ++r) xi.row(r) = x.row(idx[static_cast<std::size_t>(r)]);
    const Vector mi = xi.colwise().mean().transpose();
    const Vector dm = mi - grand;
    s.between += double(ni) * dm * dm.transpose();
    if (ni > 1) {
      const Matrix c = xi.rowwise() - mi.transpose();
      s.within += c.transpose() * c / double(ni - 1);
    }
  }
  return s;
}

LdaModel lda_fit(const Matrix& x, std::span<const int> labels) {
  std::map<int, int> counts;
  for (int l : labels) ++counts[l];
  if (counts.size() < 2) throw NumericError("LDA needs at least two classes");
  for (const auto& [label, c] : counts)
    if (c < 2) throw NumericError("LDA needs at least two samples per class");

  const Eigen::Index d = x.cols();
  Scatter s = scatter_matrices(x, labels);

  // Regularize only when S_w is not comfortably positive definite.
  const double tw = s.within.trace();
  const double tb = s.between.trace();
  Eigen::LLT<Matrix> llt(s.within);
  bool need_ridge = llt.info() != Eigen::Success;
  if (!need_ridge) {
    const Vector diag = Matrix(llt.matrixL()).diagonal();
    const double ratio = diag.minCoeff() / diag.maxCoeff();
    need_ridge = !(ratio * ratio > 1e-10);
  }
  if (need_ridge) {
    // A zero within-class scatter (each class collapsed to a point) is
    // regularized against the between-class scale instead.
    const double base = tw > 1e-12 * tb ? tw : tb;
    const double eps = 1e-6 * base / double(d);
    if (!(eps > 0.0)) throw NumericError("LDA: scatter matrices are zero");
    llt.compute(s.within + eps * Matrix::Identity(d, d));
    if (llt.info() != Eigen::Success) throw NumericError("LDA: within-class scatter is singular");
  }

  // L^-1 S_b L^-T w = lambda w, v = L^-T w.
  const Matrix linv_sb = llt.matrixL().solve(s.between);
  const Matrix reduced = llt.matrixL().solve(linv_sb.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (reduced + reduced.transpose()));
  if (es.info() != Eigen::Success) throw NumericError("LDA eigen-decomposition failed");

  const Eigen::Index m = std::min<Eigen::Index>(static_cast<Eigen::Index>(counts.size()) - 1, d);
  const Matrix w = es.eigenvectors().rowwise().reverse().leftCols(m);
  LdaModel model;
  model.projection = llt.matrixU().solve(w);
  for (Eigen::Index j = 0; j < m; ++j) model.projection.col(j).normalize();
  canonical_signs(model.projection);
  model.eigenvalues = es.eigenvalues().reverse().head(m);

  for (const auto& [label, c] : counts) model.classes.push_back(label);
  model.class_means = Matrix::Zero(m, static_cast<Eigen::Index>(model.classes.size()));
  std::vector<int> n_per(model.classes.size(), 0);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const auto pos = static_cast<Eigen::Index>(
        std::lower_bound(model.classes.begin(), model.classes.end(), labels[static_cast<std::size_t>(i)]) -
        model.classes.begin());
    model.class_means.col(pos) += model.projection.transpose() * x.row(i).transpose();
    ++n_per[static_cast<std::size_t>(pos)];
  }
  for (Eigen::Index c = 0; c < model.class_means.cols(); ++c)
    model.class_means.col(c) /= double(n_per[static_cast<std::size_t>(c)]);
  return model;
}

PcaLdaModel pca_lda_fit(const Matrix& x, std::span<const int> labels, const PcaOptions& options) {
  PcaOptions opt = options;
  std::vector<int> distinct(labels.begin(), labels.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  opt.n_classes = static_cast<int>(distinct.size());
  PcaLdaModel m;
  m.pca = pca_fit(x, opt);
  m.lda = lda_fit(m.pca.project_rows(x), labels);
  return m;
}

int pca_lda_classify(const PcaLdaModel& model, const Vector& x) {
  const Vector z = model.lda.project(model.pca.project(x));
  int best = 0;
  double best_d = (model.lda.class_means.col(0) - z).squaredNorm();
  for (Eigen::Index c = 1; c < model.lda.class_means.cols(); ++c) {
    const double dist = (model.lda.class_means.col(c) - z).squaredNorm();
    if (dist < best_d) {
      best_d = dist;
      best = static_cast<int>(c);
    }
  }
  return model.lda.classes[static_cast<std::size_t>(best)];
}

}  // namespace fer
