#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fer/expression.hpp"
#include "fer/lbp.hpp"
#include "fer/subspace.hpp"

namespace fer {

/// One training face reduced to its 19 patch descriptors.
struct LabeledDescriptor {
  int label = 0;  // expression index
  FaceDescriptor descriptor;
};

/// Stratified fold assignment: each class's indices are shuffled
/// (Fisher-Yates, SplitMix64 seeded with `seed`) and dealt round-robin.
/// Returns the fold of every sample.
std::vector<int> stratified_folds(std::span<const int> labels, int folds, std::uint64_t seed);

/// Fold count actually usable: min(requested, smallest class size). Throws
/// DataError when that is below 2.
int usable_folds(std::span<const int> labels, int requested);

/// Pooled cross-validated accuracy of the PCA-LDA nearest-mean classifier
/// on the given samples and fold assignment. A fold whose training data
/// admits no discriminant (zero variance) predicts the lowest label.
double cv_accuracy(const Matrix& samples, std::span<const int> labels, std::span<const int> fold_of, int folds,
                   const PcaOptions& pca = {});

struct PatchScore {
  double score = 0.0;
  int folds_used = 0;
};

/// Saliency score of one patch for one class pair: stratified k-fold
/// PCA-LDA accuracy.
PatchScore score_patch(const Matrix& samples, std::span<const int> labels, int folds, std::uint64_t seed,
                       const PcaOptions& pca = {});

struct SaliencyOptions {
  int folds = 10;
  std::uint64_t seed = 0;
  PcaOptions pca{};
};

/// Scores of every patch (P1..P19) for every expression pair.
struct SaliencyTable {
  std::array<std::array<double, kPatchCount>, kPairCount> scores{};
  /// Folds actually used per pair (reduced when a class is small).
  std::array<int, kPairCount> folds{};
  std::uint64_t seed = 0;

  double score(int pair, int patch_number) const {
    return scores.at(static_cast<std::size_t>(pair)).at(static_cast<std::size_t>(patch_number - 1));
  }
};

/// Shared folds: one partition per pair, reused for all 19 patches.
SaliencyTable build_table(std::span<const LabeledDescriptor> data, const SaliencyOptions& options = {});

/// Top-k patch numbers per pair, by descending score, ties to the lower patch.
struct SalientSelection {
  int k = 0;
  std::array<std::vector<int>, kPairCount> patches;

  /// The pair's patches in ascending order (feature-vector order).
  std::vector<int> sorted(int pair) const;
};

SalientSelection select_salient(const SaliencyTable& table, int k);

/// CSV: header `pair,P1,...,P19`, one row per pair named `a-b`.
std::string format_table_csv(const SaliencyTable& table);
/// Upper-triangular grid of top-k lists, rows and columns in expression order.
std::string format_selection(const SalientSelection& sel);

namespace serial {
SaliencyTable build_table(std::span<const LabeledDescriptor> data, const SaliencyOptions& options = {});
}

}  // namespace fer
