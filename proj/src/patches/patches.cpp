#include "fer/patches.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace fer {

namespace {

Point2 midpoint(Point2 a, Point2 b) { return {(a.x + b.x) / 2.0, (a.y + b.y) / 2.0}; }
Point2 offset(Point2 p, double dx, double dy, int side) { return {p.x + dx * side, p.y + dy * side}; }

}  // namespace

int patch_side(int resolution) { return round_half_up(resolution / 9.0); }

BoundingBox centered_box(Point2 c, int side, int resolution) {
  const int hi = std::max(0, resolution - side);
  const int x = std::clamp(round_half_up(c.x - side / 2.0), 0, hi);
  const int y = std::clamp(round_half_up(c.y - side / 2.0), 0, hi);
  return {x, y, side, side};
}

PatchLayout layout_patches(const LandmarkSet& lm, int resolution) {
  PatchLayout out;
  const int s = patch_side(resolution);
  if (s < 2 || s > resolution) throw std::invalid_argument("resolution too small for the patch layout");
  out.side = s;

  auto& c = out.centers;
  auto at = [&c](int number) -> Point2& { return c[static_cast<std::size_t>(number - 1)]; };
  const Point2 le = lm.pos(LandmarkId::left_eye);
  const Point2 re = lm.pos(LandmarkId::right_eye);
  const Point2 nose = lm.pos(LandmarkId::nose);

  at(1) = lm.pos(LandmarkId::lip_left);
  at(4) = lm.pos(LandmarkId::lip_right);
  at(18) = lm.pos(LandmarkId::brow_inner_left);
  at(19) = lm.pos(LandmarkId::brow_inner_right);
  at(16) = midpoint(le, re);
  at(17) = offset(at(16), 0, -1, s);
  at(3) = midpoint(le, nose);
  at(6) = midpoint(re, nose);
  at(14) = offset(le, 0, 1, s);
  at(15) = offset(re, 0, 1, s);
  at(2) = offset(nose, -1, 0, s);
  at(7) = offset(at(2), 0, -1, s);
  at(8) = offset(at(2), -1, 0, s);
  at(5) = offset(nose, 1, 0, s);
  at(12) = offset(at(5), 0, -1, s);
  at(13) = offset(at(5), 1, 0, s);
  at(9) = offset(at(1), 0, 1, s);
  at(11) = offset(at(4), 0, 1, s);
  at(10) = midpoint(at(9), at(11));

  for (std::size_t k = 0; k < c.size(); ++k) out.boxes[k] = centered_box(c[k], s, resolution);
  return out;
}

template <typename Tag>
std::array<Plane<Tag>, 4> split_blocks(const Plane<Tag>& patch) {
  if (patch.width() < 2 || patch.height() < 2) throw std::invalid_argument("split_blocks needs a side >= 2");
  const int hx = patch.width() / 2;
  const int hy = patch.height() / 2;
  const int rx = patch.width() - hx;
  const int ry = patch.height() - hy;
  return {crop(patch, Rect{0, 0, hx, hy}), crop(patch, Rect{hx, 0, rx, hy}), crop(patch, Rect{0, hy, hx, ry}),
          crop(patch, Rect{hx, hy, rx, ry})};
}

template std::array<GrayImage, 4> split_blocks(const GrayImage&);
template std::array<LabelImage, 4> split_blocks(const LabelImage&);

std::string format_layout(const PatchLayout& layout) {
  std::ostringstream out;
  for (int k = 1; k <= kPatchCount; ++k) {
    const BoundingBox& b = layout.patch(k);
    out << 'P' << k << ' ' << b.x << ' ' << b.y << ' ' << layout.side << '\n';
  }
  return out.str();
}

GrayImage draw_layout(const GrayImage& face, const PatchLayout& layout) {
  GrayImage out = face;
  for (const BoundingBox& b : layout.boxes) {
    for (int x = b.x; x < b.right(); ++x) {
      out.at(x, b.y) = 255;
      out.at(x, b.bottom() - 1) = 255;
    }
    for (int y = b.y; y < b.bottom(); ++y) {
      out.at(b.x, y) = 255;
      out.at(b.right() - 1, y) = 255;
    }
  }
  return out;
}

}  // namespace fer
