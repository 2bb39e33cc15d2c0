#pragma once

#include <array>
#include <string>

#include "fer/image.hpp"
#include "fer/landmarks.hpp"

namespace fer {

inline constexpr int kPatchCount = 19;

/// The 19 active patches, P1..P19 stored at index 0..18. Every box is a
/// side x side square inside the R x R face raster.
struct PatchLayout {
  int side = 0;
  std::array<Point2, kPatchCount> centers{};
  std::array<BoundingBox, kPatchCount> boxes{};

  const BoundingBox& patch(int number) const { return boxes.at(static_cast<std::size_t>(number - 1)); }
};

/// round(R / 9), half-up.
int patch_side(int resolution);

/// Patch centres follow the landmark-relative table below (offsets in patch
/// sides, +y downward):
///   P1 lip_left, P4 lip_right, P18 brow_inner_left, P19 brow_inner_right
///   P16 eye midpoint, P17 = P16 + (0,-1)
///   P3 = mid(left_eye, nose), P6 = mid(right_eye, nose)
///   P14 = left_eye + (0,+1), P15 = right_eye + (0,+1)
///   P2 = nose + (-1,0), P7 = P2 + (0,-1), P8 = P2 + (-1,0)
///   P5 = nose + (+1,0), P12 = P5 + (0,-1), P13 = P5 + (+1,0)
///   P9 = P1 + (0,+1), P11 = P4 + (0,+1), P10 = mid(P9, P11)
/// Boxes that would cross the raster edge are shifted inward, never shrunk.
PatchLayout layout_patches(const LandmarkSet& landmarks, int resolution);

/// Square box of `side` centred at c, shifted inside [0,R)^2.
BoundingBox centered_box(Point2 c, int side, int resolution);

/// Pixel-exact crop.
inline GrayImage extract_patch(const GrayImage& face, const BoundingBox& box) { return crop(face, box); }

/// 2x2 split in fixed order: top-left, top-right, bottom-left, bottom-right.
/// The split point is floor(extent / 2). Requires both sides >= 2.
template <typename Tag>
std::array<Plane<Tag>, 4> split_blocks(const Plane<Tag>& patch);

/// Text dump, one `P<k> <x> <y> <s>` line per patch (x,y = box top-left).
std::string format_layout(const PatchLayout& layout);

/// Face raster with every patch outline drawn at value 255.
GrayImage draw_layout(const GrayImage& face, const PatchLayout& layout);

}  // namespace fer
