#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fer/image.hpp"
#include "fer/patches.hpp"

namespace fer {

/// Histogram binning of 8-neighbour LBP labels.
///   bins256: label itself
///   bins32 : label / 8   (drops neighbours n=0..2)
///   bins16 : label / 16  (drops neighbours n=0..3)
///   u2     : 58 uniform labels in ascending order, then one shared bin
///   riu2   : number of set bits for uniform labels, 9 otherwise
enum class LbpVariant { bins256, bins32, bins16, u2, riu2 };

int bin_count(LbpVariant v);
std::string_view variant_name(LbpVariant v);
std::optional<LbpVariant> parse_variant(std::string_view name);

/// Neighbour order used throughout: n=0 east, then counter-clockwise
/// (NE, N, NW, W, SW, S, SE). Bit n is set when neighbour n >= centre.
inline constexpr std::array<std::array<int, 2>, 8> kNeighborOffsets = {{
    {1, 0}, {1, -1}, {0, -1}, {-1, -1}, {-1, 0}, {-1, 1}, {0, 1}, {1, 1}}};

std::uint8_t lbp_code(std::uint8_t center, std::span<const std::uint8_t, 8> neighbors);

/// Labels for interior pixels only: output is (w-2) x (h-2). Needs >= 3x3.
LabelImage lbp_map(const GrayImage& img);

/// Circular count of 0/1 transitions.
int uniformity(std::uint8_t label);

int bin_index(std::uint8_t label, LbpVariant v);

std::vector<std::int64_t> histogram_counts(const LabelImage& labels, LbpVariant v);
/// L1-normalised histogram (sums to 1).
std::vector<double> histogram(const LabelImage& labels, LbpVariant v);

/// Maps positions of a concatenated feature vector to (patch, block, bin).
struct FeatureLayout {
  std::vector<int> patch_ids;  // 1-based patch numbers, ascending
  LbpVariant variant = LbpVariant::bins16;

  static constexpr int kBlocks = 4;
  struct Cell {
    int patch;
    int block;
    int bin;
  };

  std::size_t size() const { return patch_ids.size() * kBlocks * static_cast<std::size_t>(bin_count(variant)); }
  std::size_t index(std::size_t patch_pos, int block, int bin) const {
    return (patch_pos * kBlocks + static_cast<std::size_t>(block)) * static_cast<std::size_t>(bin_count(variant)) +
           static_cast<std::size_t>(bin);
  }
  Cell cell(std::size_t i) const;
};

struct FeatureVector {
  std::vector<double> values;
  FeatureLayout layout;
};

/// Block histograms of one patch: the patch's LBP label map is split 2x2
/// (split_blocks order) and each block contributes one normalised histogram.
/// Length 4 * bin_count(v).
std::vector<double> patch_descriptor(const GrayImage& face, const BoundingBox& box, LbpVariant v);

/// Descriptors of all 19 patches of one face.
struct FaceDescriptor {
  LbpVariant variant = LbpVariant::bins16;
  std::array<std::vector<double>, kPatchCount> patches;

  const std::vector<double>& patch(int number) const { return patches.at(static_cast<std::size_t>(number - 1)); }
};

FaceDescriptor describe_face(const GrayImage& face, const PatchLayout& layout, LbpVariant v);

/// Concatenation of the listed patches' descriptors in (patch, block, bin) order.
FeatureVector assemble_features(const FaceDescriptor& desc, std::span<const int> patch_ids);

/// Lays out the patches from the face's landmarks and assembles the vector.
FeatureVector feature_vector(const GrayImage& face, const LandmarkSet& landmarks, std::span<const int> patch_ids,
                             LbpVariant v);

/// CSV header naming each column `P<k>_b<block>_h<bin>`.
std::string feature_csv_header(const FeatureLayout& layout);

namespace serial {
/// Reference LBP map: gathers neighbours and calls lbp_code per pixel.
LabelImage lbp_map(const GrayImage& img);
}  // namespace serial

}  // namespace fer
