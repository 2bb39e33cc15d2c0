#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "fer/saliency.hpp"
#include "fer/svm.hpp"

namespace fer {

/// One binary classifier of the ensemble: class `positive` (+1) against
/// class `negative` (-1) on the PCA-projected features of its salient patches.
struct PairClassifier {
  int positive = 0;
  int negative = 1;
  std::vector<int> patch_ids;  // ascending
  PcaModel pca;
  BinarySvm svm;

  /// Signed score; > 0 votes for `positive`, otherwise `negative`.
  double decision(const FaceDescriptor& face) const;
};

struct OaoEnsemble {
  std::vector<PairClassifier> models;
  int n_classes = kExpressionCount;
};

struct OaoConfig {
  PcaOptions pca{};
  SvmParams svm{};
  bool grid_search = false;
  int grid_folds = 5;
  std::uint64_t seed = 0;
};

/// Grid values tried when grid search is enabled; gamma is multiplied by 1/d.
inline constexpr std::array<double, 3> kGridC = {1.0, 10.0, 100.0};
inline constexpr std::array<double, 3> kGridGammaScale = {0.5, 1.0, 2.0};

/// Trains the pair's classifier from the samples of its two classes.
PairClassifier train_pair(std::span<const LabeledDescriptor> data, int a, int b, std::span<const int> patch_ids,
                          const OaoConfig& config);

/// One classifier per unordered class pair, in pair order. Throws DataError
/// when a class has fewer than 2 samples.
OaoEnsemble oao_train(std::span<const LabeledDescriptor> data, const SalientSelection& selection,
                      const OaoConfig& config = {});

struct PairDecision {
  int positive = 0;
  int negative = 1;
  double score = 0.0;
};

struct VoteResult {
  int label = 0;
  std::array<int, kExpressionCount> votes{};
  /// Summed |score| of the votes each class received.
  std::array<double, kExpressionCount> strength{};
};

/// Majority vote; ties go to the larger summed |score|, then the lower class.
VoteResult tally_votes(std::span<const PairDecision> decisions);

VoteResult oao_predict(const OaoEnsemble& ensemble, const FaceDescriptor& face);

namespace serial {
OaoEnsemble oao_train(std::span<const LabeledDescriptor> data, const SalientSelection& selection,
                      const OaoConfig& config = {});
}

}  // namespace fer
