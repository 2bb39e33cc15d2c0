#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>

#include "fer/expression.hpp"

namespace fer {

/// Rows are true classes, columns predicted classes, in expression order.
using ConfusionCounts = std::array<std::array<std::int64_t, kExpressionCount>, kExpressionCount>;

struct EvaluationReport {
  ConfusionCounts counts{};
  /// Row-normalised percentages; a row without samples is all zero.
  std::array<std::array<double, kExpressionCount>, kExpressionCount> confusion{};
  std::array<double, kExpressionCount> precision{};
  std::array<double, kExpressionCount> recall{};
  std::array<std::int64_t, kExpressionCount> support{};
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  /// Harmonic mean of macro precision and macro recall.
  double macro_f = 0.0;
  double accuracy = 0.0;
  std::int64_t total = 0;
  /// Images that could not be evaluated (no face found).
  std::int64_t skipped = 0;
};

/// Per-class precision = diag / column sum, recall = diag / row sum, 0 when
/// the denominator is 0. Throws DataError for an all-zero or negative matrix.
EvaluationReport metrics(const ConfusionCounts& counts);

/// Element-wise mean of the reports' rates; counts are summed.
EvaluationReport average_reports(std::span<const EvaluationReport> reports);

/// Human-readable confusion matrix and macro scores.
std::string format_report(const EvaluationReport& report);
std::string report_json(const EvaluationReport& report);

}  // namespace fer
