#pragma once

#include <array>
#include <optional>
#include <string_view>
#include <utility>

namespace fer {

/// The six basic expressions; the index order is the confusion-matrix order.
enum class Expression { anger = 0, disgust, fear, happiness, sadness, surprise };

inline constexpr int kExpressionCount = 6;
inline constexpr int kPairCount = kExpressionCount * (kExpressionCount - 1) / 2;

std::string_view expression_name(Expression e);
std::string_view expression_name(int index);
std::optional<Expression> parse_expression(std::string_view name);

/// Unordered class pair (a < b) in lexicographic order: (0,1), (0,2), ... (4,5).
using ClassPair = std::pair<int, int>;
const std::array<ClassPair, kPairCount>& all_pairs();
int pair_index(int a, int b);

}  // namespace fer
