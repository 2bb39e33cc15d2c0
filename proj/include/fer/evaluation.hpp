#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fer/metrics.hpp"
#include "fer/pipeline.hpp"

namespace fer {

/// Predicts every descriptor and tallies the confusion matrix.
EvaluationReport evaluate_descriptors(const ExpressionModel& model, std::span<const LabeledDescriptor> data);

/// Runs the full inference chain on each record; faceless images count as
/// skipped.
EvaluationReport evaluate(const ExpressionModel& model, const Manifest& manifest, const PipelineConfig& runtime);

struct CrossValidation {
  EvaluationReport report;
  std::vector<int> fold_of;      // per evaluated sample
  std::vector<int> predictions;  // per evaluated sample
  std::vector<Failure> failures;
};

/// Stratified k-fold: each fold trains saliency + OAO on the other folds.
/// Throws DataError (suggesting a smaller k) when a class has < folds samples.
CrossValidation cross_validate_descriptors(std::span<const LabeledDescriptor> data, const PipelineConfig& config,
                                           int folds, std::uint64_t seed);
CrossValidation cross_validate(const Manifest& manifest, const PipelineConfig& config, int folds = 10,
                               std::uint64_t seed = 0);

struct SourceReport {
  std::string source;
  EvaluationReport report;
  int repeats = 0;  // repeats that had test samples from this source
};

/// Source of each record: its manifest column, else `manifest<i>` (1-based).
std::vector<std::string> record_sources(std::span<const Manifest> manifests);

/// Repeated 90/10 split per (source, class); trains on the pooled 90% and
/// scores each source's 10% separately; reports are averaged over repeats.
std::vector<SourceReport> fused_protocol(std::span<const Manifest> manifests, const PipelineConfig& config,
                                         int repeats = 10, std::uint64_t seed = 0);

/// Thresholds 0.00, 0.01, ..., 0.30.
std::vector<double> cdf_grid();
/// Fraction of errors <= t for each threshold.
std::vector<std::pair<double, double>> landmark_cdf(std::span<const double> errors,
                                                    std::span<const double> grid);
std::string format_cdf_csv(const std::vector<std::pair<double, double>>& cdf);

struct LandmarkEvalEntry {
  std::string path;
  double error = 0.0;
  LandmarkSet predicted;  // aligned frame
  LandmarkSet truth;      // mapped into the aligned frame
};

struct LandmarkEvaluation {
  std::vector<LandmarkEvalEntry> entries;
  std::vector<Failure> skipped;
  std::vector<std::pair<double, double>> cdf;
};

/// Detects landmarks on every record with a ground-truth file (source-image
/// coordinates) and scores them with the interpupil-normalised error.
LandmarkEvaluation evaluate_landmarks(const Manifest& manifest, const PipelineConfig& config);

}  // namespace fer
