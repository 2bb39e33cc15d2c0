#include "fer/saliency.hpp"

#include <algorithm>
#include <exception>
#include <iomanip>
#include <map>
#include <numeric>
#include <sstream>

#include "fer/error.hpp"
#include "fer/rng.hpp"

namespace fer {

std::vector<int> stratified_folds(std::span<const int> labels, int folds, std::uint64_t seed) {
  if (folds < 1) throw std::invalid_argument("fold count must be positive");
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  std::vector<int> fold_of(labels.size(), 0);
  SplitMix64 rng(seed);
  for (auto& [label, idx] : by_class) {
    shuffle(std::span<std::size_t>(idx), rng);
    for (std::size_t p = 0; p < idx.size(); ++p) fold_of[idx[p]] = static_cast<int>(p % static_cast<std::size_t>(folds));
  }
  return fold_of;
}

int usable_folds(std::span<const int> labels, int requested) {
  std::map<int, int> counts;
  for (int l : labels) ++counts[l];
  int smallest = std::numeric_limits<int>::max();
  for (const auto& [l, c] : counts) smallest = std::min(smallest, c);
  const int k = std::min(requested, smallest);
  if (k < 2) throw DataError("cross-validation needs at least 2 samples per class");
  return k;
}

double cv_accuracy(const Matrix& x, std::span<const int> labels, std::span<const int> fold_of, int folds,
                   const PcaOptions& pca) {
  const int lowest = *std::min_element(labels.begin(), labels.end());
  long correct = 0;
  for (int f = 0; f < folds; ++f) {
    std::vector<Eigen::Index> train, test;
    for (std::size_t i = 0; i < labels.size(); ++i) (fold_of[i] == f ? test : train).push_back(static_cast<Eigen::Index>(i));
    if (test.empty()) continue;
    Matrix xt(static_cast<Eigen::Index>(train.size()), x.cols());
    std::vector<int> yt(train.size());
    for (std::size_t r = 0; r < train.size(); ++r) {
      xt.row(static_cast<Eigen::Index>(r)) = x.row(train[r]);
      yt[r] = labels[static_cast<std::size_t>(train[r])];
    }
    std::optional<PcaLdaModel> model;
    try {
      model = pca_lda_fit(xt, yt, pca);
    } catch (const NumericError&) {
      model.reset();
    }
    for (Eigen::Index i : test) {
      const int truth = labels[static_cast<std::size_t>(i)];
      const int pred = model ? pca_lda_classify(*model, x.row(i).transpose()) : lowest;
      correct += pred == truth;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

PatchScore score_patch(const Matrix& x, std::span<const int> labels, int folds, std::uint64_t seed,
                       const PcaOptions& pca) {
  const int k = usable_folds(labels, folds);
  const std::vector<int> fold_of = stratified_folds(labels, k, seed);
  return {cv_accuracy(x, labels, fold_of, k, pca), k};
}

namespace {

struct PairData {
  std::vector<std::size_t> members;
  std::vector<int> labels;
  std::vector<int> fold_of;
  int folds = 0;
};

std::array<PairData, kPairCount> prepare_pairs(std::span<const LabeledDescriptor> data, const SaliencyOptions& opt) {
  std::array<PairData, kPairCount> pairs;
  for (int p = 0; p < kPairCount; ++p) {
    const auto [a, b] = all_pairs()[static_cast<std::size_t>(p)];
    PairData& pd = pairs[static_cast<std::size_t>(p)];
    for (std::size_t i = 0; i < data.size(); ++i)
      if (data[i].label == a || data[i].label == b) {
        pd.members.push_back(i);
        pd.labels.push_back(data[i].label);
      }
    const bool has_a = std::count(pd.labels.begin(), pd.labels.end(), a) > 0;
    const bool has_b = std::count(pd.labels.begin(), pd.labels.end(), b) > 0;
    if (!has_a || !has_b)
      throw DataError("saliency: no samples for expression '" +
                      std::string(expression_name(has_a ? b : a)) + "'");
    pd.folds = usable_folds(pd.labels, opt.folds);
    pd.fold_of = stratified_folds(pd.labels, pd.folds, mix_seed(opt.seed, static_cast<std::uint64_t>(p)));
  }
  return pairs;
}

double score_job(std::span<const LabeledDescriptor> data, const PairData& pd, int patch, const PcaOptions& pca) {
  const auto& first = data[pd.members.front()].descriptor.patch(patch);
  Matrix x(static_cast<Eigen::Index>(pd.members.size()), static_cast<Eigen::Index>(first.size()));
  for (std::size_t r = 0; r < pd.members.size(); ++r) {
    const auto& v = data[pd.members[r]].descriptor.patch(patch);
    x.row(static_cast<Eigen::Index>(r)) = Eigen::Map<const Eigen::RowVectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  }
  return cv_accuracy(x, pd.labels, pd.fold_of, pd.folds, pca);
}

SaliencyTable empty_table(const std::array<PairData, kPairCount>& pairs, std::uint64_t seed) {
  SaliencyTable t;
  t.seed = seed;
  for (std::size_t p = 0; p < pairs.size(); ++p) t.folds[p] = pairs[p].folds;
  return t;
}

}  // namespace

SaliencyTable build_table(std::span<const LabeledDescriptor> data, const SaliencyOptions& opt) {
  const auto pairs = prepare_pairs(data, opt);
  SaliencyTable t = empty_table(pairs, opt.seed);
  constexpr int jobs = kPairCount * kPatchCount;
  std::vector<std::exception_ptr> errors(jobs);
  // Each (pair, patch) job writes only its own cell.
#pragma omp parallel for schedule(dynamic)
  for (int j = 0; j < jobs; ++j) {
    const int p = j / kPatchCount;
    const int patch = j % kPatchCount + 1;
    try {
      t.scores[static_cast<std::size_t>(p)][static_cast<std::size_t>(patch - 1)] =
          score_job(data, pairs[static_cast<std::size_t>(p)], patch, opt.pca);
    } catch (...) {
      errors[static_cast<std::size_t>(j)] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return t;
}

namespace serial {
SaliencyTable build_table(std::span<const LabeledDescriptor> data, const SaliencyOptions& opt) {
  const auto pairs = prepare_pairs(data, opt);
  SaliencyTable t = empty_table(pairs, opt.seed);
  for (int p = 0; p < kPairCount; ++p)
    for (int patch = 1; patch <= kPatchCount; ++patch)
      t.scores[static_cast<std::size_t>(p)][static_cast<std::size_t>(patch - 1)] =
          score_job(data, pairs[static_cast<std::size_t>(p)], patch, opt.pca);
  return t;
}
}  // namespace serial

std::vector<int> SalientSelection::sorted(int pair) const {
  std::vector<int> v = patches.at(static_cast<std::size_t>(pair));
  std::sort(v.begin(), v.end());
  return v;
}

SalientSelection select_salient(const SaliencyTable& table, int k) {
  if (k < 1 || k > kPatchCount) throw std::invalid_argument("top-k must be in [1, 19]");
  SalientSelection sel;
  sel.k = k;
  for (int p = 0; p < kPairCount; ++p) {
    std::vector<int> order(kPatchCount);
    std::iota(order.begin(), order.end(), 1);
    const auto& row = table.scores[static_cast<std::size_t>(p)];
    std::stable_sort(order.begin(), order.end(), [&row](int a, int b) {
      return row[static_cast<std::size_t>(a - 1)] > row[static_cast<std::size_t>(b - 1)];
    });
    order.resize(static_cast<std::size_t>(k));
    sel.patches[static_cast<std::size_t>(p)] = std::move(order);
  }
  return sel;
}

std::string format_table_csv(const SaliencyTable& table) {
  std::ostringstream out;
  out << "pair";
  for (int k = 1; k <= kPatchCount; ++k) out << ",P" << k;
  out << '\n' << std::setprecision(6);
  for (int p = 0; p < kPairCount; ++p) {
    const auto [a, b] = all_pairs()[static_cast<std::size_t>(p)];
    out << expression_name(a) << '-' << expression_name(b);
    for (double s : table.scores[static_cast<std::size_t>(p)]) out << ',' << s;
    out << '\n';
  }
  return out.str();
}

std::string format_selection(const SalientSelection& sel) {
  std::ostringstream out;
  out << std::left << std::setw(11) << "";
  for (int c = 0; c < kExpressionCount; ++c) out << std::setw(22) << expression_name(c);
  out << '\n';
  for (int r = 0; r < kExpressionCount; ++r) {
    out << std::setw(11) << expression_name(r);
    for (int c = 0; c < kExpressionCount; ++c) {
      std::string cell = "-";
      if (c > r) {
        cell.clear();
        for (int id : sel.patches[static_cast<std::size_t>(pair_index(r, c))])
          cell += (cell.empty() ? "P" : ",P") + std::to_string(id);
      }
      out << std::setw(22) << cell;
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace fer
