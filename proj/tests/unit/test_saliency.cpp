#include <map>

#include "doctest.h"
#include "fer/error.hpp"
#include "fer/expression.hpp"
#include "fer/rng.hpp"
#include "fer/saliency.hpp"

using namespace fer;

namespace {

constexpr int kDim = 64;  // 4 blocks x 16 bins

std::vector<double> noise_hist(SplitMix64& rng) {
  std::vector<double> h(kDim);
  for (double& v : h) v = rng.uniform();
  return h;
}

// Only P1 separates anger from every other class.
std::vector<LabeledDescriptor> planted(int per_class, std::uint64_t seed) {
  SplitMix64 rng(seed);
  std::vector<LabeledDescriptor> out;
  for (int c = 0; c < kExpressionCount; ++c)
    for (int i = 0; i < per_class; ++i) {
      LabeledDescriptor d;
      d.label = c;
      for (auto& p : d.descriptor.patches) p = noise_hist(rng);
      if (c == 0) d.descriptor.patches[0][0] += 3.0;
      out.push_back(std::move(d));
    }
  return out;
}

Matrix two_class(SplitMix64& rng, int n, int dim, double shift, std::vector<int>& labels) {
  Matrix x(2 * n, dim);
  labels.clear();
  for (int i = 0; i < 2 * n; ++i) {
    for (int j = 0; j < dim; ++j) x(i, j) = rng.normal();
    if (i >= n) x(i, 0) += shift;
    labels.push_back(i < n ? 0 : 1);
  }
  return x;
}

}  // namespace

TEST_SUITE("saliency") {

TEST_CASE("stratified folds are balanced and seeded") {
  std::vector<int> labels;
  for (int i = 0; i < 23; ++i) labels.push_back(i % 3 == 0 ? 1 : 4);
  const auto f = stratified_folds(labels, 5, 9);
  REQUIRE(f.size() == labels.size());
  std::map<std::pair<int, int>, int> count;
  for (std::size_t i = 0; i < f.size(); ++i) {
    CHECK(f[i] >= 0);
    CHECK(f[i] < 5);
    ++count[{labels[i], f[i]}];
  }
  for (int cls : {1, 4}) {
    int lo = 1 << 30, hi = 0;
    for (int k = 0; k < 5; ++k) {
      lo = std::min(lo, count[{cls, k}]);
      hi = std::max(hi, count[{cls, k}]);
    }
    CHECK(hi - lo <= 1);
  }
  CHECK(stratified_folds(labels, 5, 9) == f);
  CHECK(stratified_folds(labels, 5, 10) != f);

  CHECK(usable_folds(labels, 10) == 8);
  const std::vector<int> tiny = {0, 1, 1};
  CHECK_THROWS_AS(usable_folds(tiny, 10), DataError);
}

TEST_CASE("planted signal, noise and identical features") {
  SplitMix64 rng(1);
  std::vector<int> y;
  const Matrix sig = two_class(rng, 50, 4, 8.0, y);
  CHECK(score_patch(sig, y, 10, 1).score >= 0.95);

  double mean = 0;
  for (int rep = 0; rep < 10; ++rep) {
    const Matrix noise = two_class(rng, 50, 4, 0.0, y);
    mean += score_patch(noise, y, 10, static_cast<std::uint64_t>(rep)).score / 10;
  }
  CHECK(mean == doctest::Approx(0.5).epsilon(0.2));

  Matrix same(60, 4);
  for (int i = 0; i < 60; ++i) same.row(i) << 1.0, 2.0, 3.0, 4.0;
  std::vector<int> y2(60, 0);
  std::fill(y2.begin() + 30, y2.end(), 1);
  CHECK(score_patch(same, y2, 10, 1).score <= 0.6);
}

TEST_CASE("more separable samples never lower the score") {
  SplitMix64 rng(2);
  std::vector<int> y;
  const Matrix base = two_class(rng, 40, 4, 1.5, y);
  const double before = score_patch(base, y, 10, 3).score;
  Matrix more(base.rows() + 80, 4);
  more.topRows(base.rows()) = base;
  std::vector<int> y2 = y;
  for (int i = 0; i < 80; ++i) {
    for (int j = 0; j < 4; ++j) more(base.rows() + i, j) = 0.1 * rng.normal();
    more(base.rows() + i, 0) += i < 40 ? -20.0 : 20.0;
    y2.push_back(i < 40 ? 0 : 1);
  }
  CHECK(score_patch(more, y2, 10, 3).score >= before);
}

TEST_CASE("planted patch ranks first and the table is deterministic") {
  const auto data = planted(12, 5);
  SaliencyOptions o;
  o.seed = 11;
  const SaliencyTable t = build_table(data, o);
  const int anger_fear = pair_index(0, static_cast<int>(Expression::fear));
  CHECK(t.score(anger_fear, 1) >= 0.95);
  const SalientSelection sel = select_salient(t, 4);
  CHECK(sel.patches[static_cast<std::size_t>(anger_fear)][0] == 1);
  for (const auto& [a, b] : all_pairs())
    if (a == 0) CHECK(sel.patches[static_cast<std::size_t>(pair_index(a, b))][0] == 1);

  const SaliencyTable again = build_table(data, o);
  CHECK(again.scores == t.scores);
  CHECK(serial::build_table(data, o).scores == t.scores);
  for (int f : t.folds) CHECK(f == 10);
}

TEST_CASE("selection order and k bounds") {
  SaliencyTable t;
  for (int p = 0; p < kPairCount; ++p)
    for (int k = 0; k < kPatchCount; ++k)
      t.scores[static_cast<std::size_t>(p)][static_cast<std::size_t>(k)] = ((k * 7 + p) % 5) / 4.0;
  const SalientSelection sel = select_salient(t, 6);
  for (int p = 0; p < kPairCount; ++p) {
    const auto& list = sel.patches[static_cast<std::size_t>(p)];
    REQUIRE(list.size() == 6);
    for (std::size_t i = 1; i < list.size(); ++i) {
      const double a = t.score(p, list[i - 1]), b = t.score(p, list[i]);
      CHECK(a >= b);
      if (a == b) CHECK(list[i - 1] < list[i]);
    }
    const auto sorted = sel.sorted(p);
    CHECK(std::is_sorted(sorted.begin(), sorted.end()));
  }
  const SalientSelection all = select_salient(t, 19);
  for (int p = 0; p < kPairCount; ++p) CHECK(all.sorted(p).size() == 19);
  CHECK_THROWS(select_salient(t, 0));
  CHECK_THROWS(select_salient(t, 20));

  const std::string csv = format_table_csv(t);
  CHECK(csv.rfind("pair,P1,", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 16);
}

TEST_CASE("small classes reduce the fold count") {
  const auto data = planted(4, 6);
  SaliencyOptions o;
  o.folds = 10;
  const SaliencyTable t = build_table(data, o);
  for (int f : t.folds) CHECK(f == 4);
  CHECK_THROWS_AS(build_table(planted(1, 6), o), DataError);
}

}  // TEST_SUITE
