#include "fer/oao.hpp"
#include "fer/rng.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <string>

namespace fer {

namespace {

Vector to_vector(const std::vector<double>& v) { return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())); }

Vector pair_features(const FaceDescriptor& face, std::span<const int> patch_ids) {
  return to_vector(assemble_features(face, patch_ids).values);
}

double grid_accuracy(const Matrix& z, std::span<const int> y, std::span<const int> fold_of, int folds,
                     const SvmParams& params) {
  int correct = 0;
  for (int f = 0; f < folds; ++f) {
    std::vector<Eigen::Index> tr, te;
    for (std::size_t i = 0; i < y.size(); ++i) (fold_of[i] == f ? te : tr).push_back(static_cast<Eigen::Index>(i));
    Matrix xtr(static_cast<Eigen::Index>(tr.size()), z.cols());
    std::vector<int> ytr;
    for (std::size_t r = 0; r < tr.size(); ++r) {
      xtr.row(static_cast<Eigen::Index>(r)) = z.row(tr[r]);
      ytr.push_back(y[static_cast<std::size_t>(tr[r])]);
    }
    try {
      const BinarySvm m = svm_train(xtr, ytr, params).model;
      for (Eigen::Index i : te) {
        const int pred = m.decision(z.row(i).transpose()) > 0 ? 1 : -1;
        if (pred == y[static_cast<std::size_t>(i)]) ++correct;
      }
    } catch (const ConvergenceError&) {
      // Counts as zero accuracy for this fold.
    }
  }
  return static_cast<double>(correct) / static_cast<double>(y.size());
}

void check_counts(std::span<const LabeledDescriptor> data, int n_classes) {
  std::vector<int> count(static_cast<std::size_t>(n_classes), 0);
  for (const LabeledDescriptor& d : data) {
    if (d.label < 0 || d.label >= n_classes) throw DataError("label out of range: " + std::to_string(d.label));
    ++count[static_cast<std::size_t>(d.label)];
  }
  for (int c = 0; c < n_classes; ++c)
    if (count[static_cast<std::size_t>(c)] < 2)
      throw DataError("class '" + std::string(expression_name(c)) + "' needs at least 2 samples, has " +
                      std::to_string(count[static_cast<std::size_t>(c)]));
}

}  // namespace

double PairClassifier::decision(const FaceDescriptor& face) const {
  return svm.decision(pca.project(pair_features(face, patch_ids)));
}

PairClassifier train_pair(std::span<const LabeledDescriptor> data, int a, int b, std::span<const int> patch_ids,
                          const OaoConfig& config) {
  PairClassifier pc;
  pc.positive = a;
  pc.negative = b;
  pc.patch_ids.assign(patch_ids.begin(), patch_ids.end());
  std::sort(pc.patch_ids.begin(), pc.patch_ids.end());

  std::vector<const LabeledDescriptor*> rows;
  std::vector<int> y;
  for (const LabeledDescriptor& d : data)
    if (d.label == a || d.label == b) {
      rows.push_back(&d);
      y.push_back(d.label == a ? 1 : -1);
    }
  if (rows.empty()) throw DataError("no samples for pair");
  const Vector first = pair_features(rows.front()->descriptor, pc.patch_ids);
  Matrix x(static_cast<Eigen::Index>(rows.size()), first.size());
  for (std::size_t r = 0; r < rows.size(); ++r)
    x.row(static_cast<Eigen::Index>(r)) = pair_features(rows[r]->descriptor, pc.patch_ids).transpose();

  PcaOptions po = config.pca;
  po.n_classes = 2;
  pc.pca = pca_fit(x, po);
  const Matrix z = pc.pca.project_rows(x);
  const double inv_d = 1.0 / static_cast<double>(std::max<Eigen::Index>(1, z.cols()));

  SvmParams params = config.svm;
  if (params.gamma <= 0) params.gamma = inv_d;
  if (config.grid_search) {
    const int folds = usable_folds(y, config.grid_folds);
    const std::vector<int> fold_of = stratified_folds(y, folds, mix_seed(config.seed, static_cast<std::uint64_t>(pair_index(a, b))));
    double best = -1.0;
    for (double c : kGridC)
      for (double g : kGridGammaScale) {
        SvmParams trial = config.svm;
        trial.c = c;
        trial.gamma = g * inv_d;
        const double acc = grid_accuracy(z, y, fold_of, folds, trial);
        if (acc > best) {
          best = acc;
          params = trial;
        }
      }
  }
  pc.svm = svm_train(z, y, params).model;
  return pc;
}

namespace {

OaoEnsemble train_all(std::span<const LabeledDescriptor> data, const SalientSelection& selection,
                      const OaoConfig& config, bool parallel) {
  check_counts(data, kExpressionCount);
  OaoEnsemble ens;
  ens.models.resize(kPairCount);
  std::array<std::exception_ptr, kPairCount> errors{};
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (int p = 0; p < kPairCount; ++p) {
    try {
      const auto [a, b] = all_pairs()[static_cast<std::size_t>(p)];
      ens.models[static_cast<std::size_t>(p)] = train_pair(data, a, b, selection.sorted(p), config);
    } catch (...) {
      errors[static_cast<std::size_t>(p)] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return ens;
}

}  // namespace

OaoEnsemble oao_train(std::span<const LabeledDescriptor> data, const SalientSelection& selection,
                      const OaoConfig& config) {
  return train_all(data, selection, config, true);
}

VoteResult tally_votes(std::span<const PairDecision> decisions) {
  std::vector<PairDecision> d(decisions.begin(), decisions.end());
  std::sort(d.begin(), d.end(), [](const PairDecision& x, const PairDecision& y) {
    return x.positive != y.positive ? x.positive < y.positive : x.negative < y.negative;
  });
  VoteResult r;
  for (const PairDecision& pd : d) {
    const int winner = pd.score > 0 ? pd.positive : pd.negative;
    ++r.votes.at(static_cast<std::size_t>(winner));
    r.strength.at(static_cast<std::size_t>(winner)) += std::abs(pd.score);
  }
  for (int c = 1; c < kExpressionCount; ++c) {
    const auto i = static_cast<std::size_t>(c), best = static_cast<std::size_t>(r.label);
    if (r.votes[i] > r.votes[best] || (r.votes[i] == r.votes[best] && r.strength[i] > r.strength[best])) r.label = c;
  }
  return r;
}

VoteResult oao_predict(const OaoEnsemble& ensemble, const FaceDescriptor& face) {
  std::vector<PairDecision> d;
  d.reserve(ensemble.models.size());
  for (const PairClassifier& m : ensemble.models) d.push_back({m.positive, m.negative, m.decision(face)});
  return tally_votes(d);
}

namespace serial {
OaoEnsemble oao_train(std::span<const LabeledDescriptor> data, const SalientSelection& selection,
                      const OaoConfig& config) {
  return train_all(data, selection, config, false);
}
}  // namespace serial

}  // namespace fer
