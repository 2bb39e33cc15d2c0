#include <algorithm>

#include "doctest.h"
#include "fer/error.hpp"
#include "fer/oao.hpp"
#include "fer/rng.hpp"
#include "fer/svm.hpp"

using namespace fer;

namespace {

struct Data {
  Matrix x;
  std::vector<int> y;
};

Data blobs2d(SplitMix64& rng, int n, double gap, double sd = 0.5) {
  Data d;
  d.x.resize(2 * n, 2);
  for (int i = 0; i < 2 * n; ++i) {
    const bool pos = i < n;
    d.x(i, 0) = (pos ? gap : -gap) + sd * rng.normal();
    d.x(i, 1) = sd * rng.normal();
    d.y.push_back(pos ? 1 : -1);
  }
  return d;
}

double naive_decision(const SvmFit& f, const Matrix& train, std::span<const int> y, const Vector& x) {
  double s = f.model.bias;
  for (Eigen::Index i = 0; i < train.rows(); ++i) {
    double d2 = 0;
    for (Eigen::Index j = 0; j < x.size(); ++j) d2 += (x(j) - train(i, j)) * (x(j) - train(i, j));
    s += f.alpha(i) * y[static_cast<std::size_t>(i)] * std::exp(-f.model.gamma * d2);
  }
  return s;
}

int bound_count(const SvmFit& f, double c) {
  int n = 0;
  for (Eigen::Index i = 0; i < f.alpha.size(); ++i) n += f.alpha(i) >= c * (1 - 1e-12);
  return n;
}

void check_dual(const SvmFit& f, std::span<const int> y, double c) {
  double s = 0;
  for (Eigen::Index i = 0; i < f.alpha.size(); ++i) {
    CHECK(f.alpha(i) >= 0.0);
    CHECK(f.alpha(i) <= c);
    s += f.alpha(i) * y[static_cast<std::size_t>(i)];
  }
  CHECK(std::abs(s) <= 1e-6);
}

// Class c lifts bin c of every block of patches 1..4.
std::vector<LabeledDescriptor> six_class(int per_class, std::uint64_t seed) {
  SplitMix64 rng(seed);
  std::vector<LabeledDescriptor> out;
  for (int c = 0; c < kExpressionCount; ++c)
    for (int i = 0; i < per_class; ++i) {
      LabeledDescriptor d;
      d.label = c;
      for (auto& p : d.descriptor.patches) {
        p.assign(64, 0.0);
        for (double& v : p) v = 0.05 * rng.uniform();
      }
      for (int k = 0; k < 4; ++k)
        for (int blk = 0; blk < 4; ++blk) d.descriptor.patches[static_cast<std::size_t>(k)][blk * 16 + c] += 0.3;
      out.push_back(std::move(d));
    }
  return out;
}

SalientSelection first_four() {
  SalientSelection s;
  s.k = 4;
  for (auto& p : s.patches) p = {1, 2, 3, 4};
  return s;
}

std::vector<PairDecision> decisions_for(const std::array<std::array<double, kExpressionCount>, kExpressionCount>& s) {
  std::vector<PairDecision> out;
  for (const auto& [a, b] : all_pairs()) out.push_back({a, b, s[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)]});
  return out;
}

}  // namespace

TEST_SUITE("classify") {

TEST_CASE("XOR is fitted exactly") {
  Matrix x(4, 2);
  x << 0, 0, 1, 1, 0, 1, 1, 0;
  const std::vector<int> y = {1, 1, -1, -1};
  SvmParams p;
  p.gamma = 1.0;
  const SvmFit f = svm_train(x, y, p);
  for (int i = 0; i < 4; ++i) CHECK(f.model.decision(x.row(i).transpose()) * y[static_cast<std::size_t>(i)] > 0);
  check_dual(f, y, p.c);
}

TEST_CASE("separable blobs: accuracy, KKT and dual feasibility") {
  SplitMix64 rng(1);
  const Data d = blobs2d(rng, 30, 2.0);
  SvmParams p;
  p.gamma = 0.5;
  const SvmFit f = svm_train(d.x, d.y, p);
  CHECK(f.violation <= p.tol);
  check_dual(f, d.y, p.c);
  const double tol = 2 * p.tol;
  for (Eigen::Index i = 0; i < d.x.rows(); ++i) {
    const double m = d.y[static_cast<std::size_t>(i)] * f.model.decision(d.x.row(i).transpose());
    CHECK(m > 0);
    if (f.alpha(i) == 0.0) CHECK(m >= 1 - tol);
    else if (f.alpha(i) < p.c) CHECK(m == doctest::Approx(1.0).epsilon(tol));
    else CHECK(m <= 1 + tol);
  }
  // A free support vector of the positive class scores +1.
  for (Eigen::Index i = 0; i < d.x.rows(); ++i)
    if (d.y[static_cast<std::size_t>(i)] == 1 && f.alpha(i) > 1e-8 && f.alpha(i) < p.c * 0.999) {
      CHECK(f.model.decision(d.x.row(i).transpose()) == doctest::Approx(1.0).epsilon(tol));
      break;
    }
}

TEST_CASE("decision equals naive summation and decays to the bias") {
  SplitMix64 rng(2);
  const Data d = blobs2d(rng, 20, 1.0, 1.0);
  const SvmFit f = svm_train(d.x, d.y);
  CHECK(f.model.gamma == 0.5);  // 1 / d
  for (int t = 0; t < 20; ++t) {
    Vector x(2);
    x << 3 * rng.normal(), 3 * rng.normal();
    CHECK(f.model.decision(x) == doctest::Approx(naive_decision(f, d.x, d.y, x)).epsilon(1e-10));
  }
  Vector far(2);
  far << 1e3, -1e3;
  CHECK(f.model.decision(far) == doctest::Approx(f.model.bias).epsilon(1e-12));
  CHECK_THROWS_AS(f.model.decision(Vector::Zero(3)), std::invalid_argument);
}

TEST_CASE("decision agrees with its analytic gradient") {
  SplitMix64 rng(3);
  const Data d = blobs2d(rng, 20, 1.0, 1.0);
  const SvmFit f = svm_train(d.x, d.y);
  const BinarySvm& m = f.model;
  for (int t = 0; t < 20; ++t) {
    Vector x(2), dir(2);
    x << rng.normal(), rng.normal();
    dir << rng.normal(), rng.normal();
    dir.normalize();
    Vector grad = Vector::Zero(2);
    for (Eigen::Index i = 0; i < m.support.rows(); ++i) {
      const Vector diff = x - m.support.row(i).transpose();
      grad += m.coef(i) * -2 * m.gamma * std::exp(-m.gamma * diff.squaredNorm()) * diff;
    }
    const double h = 1e-5;
    const double fd = (m.decision(x + h * dir) - m.decision(x - h * dir)) / (2 * h);
    const double exact = grad.dot(dir);
    CHECK(std::abs(fd - exact) <= 1e-3 * std::max(1.0, std::abs(exact)));
    double lip = 0;
    for (Eigen::Index i = 0; i < m.coef.size(); ++i) lip += std::abs(m.coef(i));
    lip *= std::sqrt(2 * m.gamma);
    CHECK(std::abs(exact) <= lip);
  }
}

TEST_CASE("small C creates bound support vectors") {
  SplitMix64 rng(4);
  const Data d = blobs2d(rng, 25, 1.5, 0.6);
  SvmParams hard;
  hard.c = 1e5;
  hard.gamma = 0.5;
  const SvmFit fh = svm_train(d.x, d.y, hard);
  CHECK(bound_count(fh, hard.c) == 0);
  const double threshold = fh.alpha.maxCoeff();
  SvmParams soft = hard;
  soft.c = 0.5 * threshold;
  const SvmFit fs = svm_train(d.x, d.y, soft);
  CHECK(bound_count(fs, soft.c) > bound_count(fh, hard.c));
  check_dual(fs, d.y, soft.c);
}

TEST_CASE("training errors") {
  Matrix x(3, 2);
  x.setRandom();
  const std::vector<int> one = {1, 1, 1};
  CHECK_THROWS_AS(svm_train(x, one), DataError);
  const std::vector<int> bad = {1, 2, -1};
  CHECK_THROWS_AS(svm_train(x, bad), DataError);

  SplitMix64 rng(5);
  const Data d = blobs2d(rng, 40, 0.2, 1.0);
  SvmParams p;
  p.max_passes = 1;
  p.tol = 1e-9;
  try {
    svm_train(d.x, d.y, p);
    FAIL("expected ConvergenceError");
  } catch (const ConvergenceError& e) {
    CHECK(e.violation() > p.tol);
  }
}

TEST_CASE("vote tally") {
  std::array<std::array<double, kExpressionCount>, kExpressionCount> s{};
  // Class 3 wins all its pairs; elsewhere the lower index wins.
  for (const auto& [a, b] : all_pairs()) s[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] = b == 3 ? -1.0 : 1.0;
  VoteResult r = tally_votes(decisions_for(s));
  CHECK(r.label == 3);
  CHECK(r.votes[3] == 5);
  int total = 0;
  for (int v : r.votes) total += v;
  CHECK(total == 15);

  // Three-way tie between 0, 1 and 2 (four votes each).
  for (const auto& [a, b] : all_pairs()) {
    double v = 1.0;
    if (a == 0 && b == 2) v = -1.0;  // 2 beats 0
    s[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] = v;
  }
  s[1][3] = 5.0;  // class 1 gathers the most score
  r = tally_votes(decisions_for(s));
  CHECK(r.votes[0] == 4);
  CHECK(r.votes[1] == 4);
  CHECK(r.votes[2] == 4);
  CHECK(r.label == 1);
  s[1][3] = 1.0;
  r = tally_votes(decisions_for(s));
  CHECK(r.label == 0);

  s[1][3] = 5.0;
  auto shuffled = decisions_for(s);
  SplitMix64 rng(6);
  for (int t = 0; t < 10; ++t) {
    shuffle(std::span<PairDecision>(shuffled), rng);
    CHECK(tally_votes(shuffled).label == 1);
  }
}

TEST_CASE("ensemble of 15 pair models") {
  const auto train = six_class(20, 7);
  const auto test = six_class(30, 8);
  const SalientSelection sel = first_four();
  const OaoEnsemble e = oao_train(train, sel);
  REQUIRE(e.models.size() == 15);
  for (std::size_t i = 0; i < e.models.size(); ++i) {
    const auto& m = e.models[i];
    CHECK(std::make_pair(m.positive, m.negative) == all_pairs()[i]);
    CHECK(m.pca.input_dim() == 4 * 4 * 16);
    CHECK(m.svm.dim() == m.pca.output_dim());
    CHECK(m.pca.output_dim() <= 38);
  }
  int correct = 0;
  for (const auto& s : test) correct += oao_predict(e, s.descriptor).label == s.label;
  CHECK(correct >= static_cast<int>(0.95 * static_cast<double>(test.size())));

  OaoEnsemble perm = e;
  std::reverse(perm.models.begin(), perm.models.end());
  std::swap(perm.models[2], perm.models[9]);
  for (const auto& s : test) CHECK(oao_predict(perm, s.descriptor).label == oao_predict(e, s.descriptor).label);

  const OaoEnsemble ser = serial::oao_train(train, sel);
  for (std::size_t i = 0; i < e.models.size(); ++i) CHECK(ser.models[i].svm.coef == e.models[i].svm.coef);
}

TEST_CASE("grid search and sample checks") {
  const auto train = six_class(10, 9);
  OaoConfig cfg;
  cfg.grid_search = true;
  const OaoEnsemble e = oao_train(train, first_four(), cfg);
  for (const auto& m : e.models) {
    CHECK(std::find(kGridC.begin(), kGridC.end(), m.svm.c) != kGridC.end());
    bool grid_gamma = false;
    for (double g : kGridGammaScale) grid_gamma |= std::abs(m.svm.gamma - g / static_cast<double>(m.svm.dim())) < 1e-12;
    CHECK(grid_gamma);
  }
  auto few = six_class(2, 10);
  few.erase(few.begin() + 2);  // disgust keeps one sample
  CHECK_THROWS_AS(oao_train(few, first_four()), DataError);
}

}  // TEST_SUITE
