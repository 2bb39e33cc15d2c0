#pragma once

// Reference numbers for comparison reports. Nothing in the
// library depends on these values.

#include <array>
#include <string_view>

#include "fer/expression.hpp"

namespace fer::reference {

inline constexpr double kMacroF = 94.39;
inline constexpr double kMacroRecall = 94.1;
inline constexpr double kMacroPrecision = 94.69;
/// Cross-dataset accuracy of the small posed dataset (trained on the large one).
inline constexpr double kCrossDatasetAccuracy = 91.8;

/// Row/column order of the reference confusion matrix.
inline constexpr std::array<Expression, kExpressionCount> kConfusionOrder = {
    Expression::anger, Expression::fear, Expression::disgust,
    Expression::happiness, Expression::sadness, Expression::surprise};

/// Row percentages in kConfusionOrder.
inline constexpr std::array<std::array<double, kExpressionCount>, kExpressionCount> kConfusionPercent = {{
    {87.8, 0, 0, 0, 7.32, 4.88},
    {0, 93.33, 0, 4.44, 0, 2.22},
    {0, 1.88, 94.33, 0, 1.88, 1.88},
    {1.44, 2.89, 0, 94.2, 0, 1.44},
    {1.78, 0, 0, 1.78, 96.42, 0},
    {0, 0, 0, 1.53, 0, 98.46},
}};

/// Sample counts per row of kConfusionPercent.
inline constexpr std::array<int, kExpressionCount> kClassCounts = {41, 45, 53, 69, 56, 65};

struct PairPatches {
  Expression a;
  Expression b;
  std::array<int, 4> patches;
};

/// Top-four salient patches per expression pair on fused data.
inline constexpr std::array<PairPatches, kPairCount> kSalientPatches = {{
    {Expression::anger, Expression::fear, {1, 4, 9, 10}},
    {Expression::anger, Expression::disgust, {2, 4, 5, 6}},
    {Expression::anger, Expression::happiness, {1, 4, 9, 11}},
    {Expression::anger, Expression::sadness, {1, 9, 10, 18}},
    {Expression::anger, Expression::surprise, {1, 4, 9, 10}},
    {Expression::fear, Expression::disgust, {1, 2, 4, 8}},
    {Expression::fear, Expression::happiness, {1, 4, 8, 9}},
    {Expression::fear, Expression::sadness, {1, 4, 8, 9}},
    {Expression::fear, Expression::surprise, {1, 5, 11, 12}},
    {Expression::disgust, Expression::happiness, {1, 4, 5, 6}},
    {Expression::disgust, Expression::sadness, {1, 9, 18, 2}},
    {Expression::disgust, Expression::surprise, {1, 2, 5, 6}},
    {Expression::happiness, Expression::sadness, {1, 7, 9, 11}},
    {Expression::happiness, Expression::surprise, {2, 4, 5, 11}},
    {Expression::sadness, Expression::surprise, {1, 9, 10, 11}},
}};

}  // namespace fer::reference
