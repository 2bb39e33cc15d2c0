#include "fer/expression.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>
#include <string>

namespace fer {

namespace {
constexpr std::array<std::string_view, kExpressionCount> kNames = {"anger",     "disgust", "fear",
                                                                   "happiness", "sadness", "surprise"};
}

std::string_view expression_name(Expression e) { return kNames[static_cast<std::size_t>(e)]; }

std::string_view expression_name(int index) {
  if (index < 0 || index >= kExpressionCount) throw std::out_of_range("expression index");
  return kNames[static_cast<std::size_t>(index)];
}

std::optional<Expression> parse_expression(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  for (std::size_t i = 0; i < kNames.size(); ++i)
    if (kNames[i] == lower) return static_cast<Expression>(i);
  return std::nullopt;
}

const std::array<ClassPair, kPairCount>& all_pairs() {
  static const auto pairs = [] {
    std::array<ClassPair, kPairCount> p{};
    std::size_t k = 0;
    for (int a = 0; a < kExpressionCount; ++a)
      for (int b = a + 1; b < kExpressionCount; ++b) p[k++] = {a, b};
    return p;
  }();
  return pairs;
}

int pair_index(int a, int b) {
  if (a > b) std::swap(a, b);
  if (a < 0 || b >= kExpressionCount || a == b) throw std::out_of_range("invalid class pair");
  // Pairs before row a, then offset within the row.
  return a * (2 * kExpressionCount - a - 1) / 2 + (b - a - 1);
}

}  // namespace fer
