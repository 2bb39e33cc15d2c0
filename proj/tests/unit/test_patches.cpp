#include "doctest.h"
#include "fer/patches.hpp"
#include "fer/rng.hpp"
#include "support.hpp"

using namespace fer;
using testing::random_image;

namespace {

// Symmetric about x = (R-1)/2.
LandmarkSet symmetric_set(int r) {
  LandmarkSet s;
  auto put = [&](LandmarkId id, double fx, double fy) { s[id].pos = {fx * (r - 1), fy * (r - 1)}; };
  put(LandmarkId::left_eye, 0.31, 0.36);
  put(LandmarkId::right_eye, 0.69, 0.36);
  put(LandmarkId::nose, 0.5, 0.56);
  put(LandmarkId::lip_left, 0.34, 0.77);
  put(LandmarkId::lip_right, 0.66, 0.77);
  put(LandmarkId::brow_inner_left, 0.41, 0.26);
  put(LandmarkId::brow_inner_right, 0.59, 0.26);
  return s;
}

}  // namespace

TEST_SUITE("patches") {

TEST_CASE("patch side is R/9 rounded half-up") {
  CHECK(patch_side(96) == 11);
  CHECK(patch_side(48) == 5);
  CHECK(patch_side(144) == 16);
  CHECK(patch_side(192) == 21);
  CHECK(patch_side(63) == 7);
  CHECK(patch_side(40) == 4);  // 4.44
  CHECK(patch_side(41) == 5);  // 4.56
}

TEST_CASE("layout geometry follows the landmark table") {
  const int r = 96;
  const LandmarkSet lm = symmetric_set(r);
  const PatchLayout p = layout_patches(lm, r);
  const double s = p.side;
  const Point2 le = lm.pos(LandmarkId::left_eye), re = lm.pos(LandmarkId::right_eye);
  const Point2 nose = lm.pos(LandmarkId::nose);
  CHECK(p.centers[15] == Point2{(le.x + re.x) / 2, (le.y + re.y) / 2});
  CHECK(p.centers[16] == Point2{p.centers[15].x, p.centers[15].y - s});
  CHECK(p.centers[0] == lm.pos(LandmarkId::lip_left));
  CHECK(p.centers[3] == lm.pos(LandmarkId::lip_right));
  CHECK(p.centers[17] == lm.pos(LandmarkId::brow_inner_left));
  CHECK(p.centers[1] == Point2{nose.x - s, nose.y});
  CHECK(p.centers[7] == Point2{nose.x - 2 * s, nose.y});
  CHECK(p.centers[11] == Point2{nose.x + s, nose.y - s});
  CHECK(p.centers[9].x == doctest::Approx((p.centers[8].x + p.centers[10].x) / 2));
  CHECK(p.centers[13] == Point2{le.x, le.y + s});
  for (const BoundingBox& b : p.boxes) {
    CHECK(b.w == 11);
    CHECK(b.h == 11);
  }
}

TEST_CASE("mirror pairs are symmetric within one pixel") {
  for (int r : {48, 96, 144, 192}) {
    const PatchLayout p = layout_patches(symmetric_set(r), r);
    const std::array<std::pair<int, int>, 8> pairs = {
        {{1, 4}, {9, 11}, {2, 5}, {7, 12}, {8, 13}, {3, 6}, {14, 15}, {18, 19}}};
    for (auto [a, b] : pairs) {
      const BoundingBox& ba = p.patch(a);
      const BoundingBox& bb = p.patch(b);
      CHECK(std::abs(ba.x - (r - bb.right())) <= 1);
      CHECK(ba.y == bb.y);
    }
  }
}

TEST_CASE("boxes stay inside and keep their size at the raster edge") {
  LandmarkSet lm = symmetric_set(96);
  lm[LandmarkId::lip_left].pos = {-10, 120};
  lm[LandmarkId::brow_inner_right].pos = {95, 0};
  const PatchLayout p = layout_patches(lm, 96);
  for (const BoundingBox& b : p.boxes) {
    CHECK(Rect{0, 0, 96, 96}.contains(b));
    CHECK(b.w == p.side);
  }
  CHECK(p.patch(1) == BoundingBox{0, 85, 11, 11});
}

TEST_CASE("central landmarks are never clipped") {
  SplitMix64 rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    const int r = 48 + static_cast<int>(rng.below(160));
    LandmarkSet lm;
    for (LandmarkId id : kAllLandmarks) lm[id].pos = {(0.2 + 0.6 * rng.uniform()) * r, (0.2 + 0.6 * rng.uniform()) * r};
    const PatchLayout p = layout_patches(lm, r);
    for (int k = 0; k < kPatchCount; ++k) {
      const Point2 c = p.centers[static_cast<std::size_t>(k)];
      const BoundingBox& b = p.boxes[static_cast<std::size_t>(k)];
      if (c.x - p.side / 2.0 >= 0 && c.y - p.side / 2.0 >= 0 && c.x + p.side / 2.0 <= r - 1 &&
          c.y + p.side / 2.0 <= r - 1)
        CHECK(b == BoundingBox{round_half_up(c.x - p.side / 2.0), round_half_up(c.y - p.side / 2.0), p.side, p.side});
    }
  }
}

TEST_CASE("layout is translation-equivariant") {
  const LandmarkSet lm = symmetric_set(144);
  LandmarkSet moved = lm;
  for (LandmarkId id : kAllLandmarks) moved[id].pos = {lm.pos(id).x + 3, lm.pos(id).y - 2};
  const PatchLayout a = layout_patches(lm, 144), b = layout_patches(moved, 144);
  for (std::size_t k = 0; k < a.boxes.size(); ++k) {
    CHECK(b.boxes[k].x == a.boxes[k].x + 3);
    CHECK(b.boxes[k].y == a.boxes[k].y - 2);
  }
}

TEST_CASE("crop identities and composition") {
  const GrayImage img = random_image(30, 20, 3);
  CHECK(extract_patch(img, img.bounds()) == img);
  const GrayImage one = extract_patch(img, {7, 4, 1, 1});
  CHECK(one.at(0, 0) == img.pixels()[4 * 30 + 7]);
  const Rect a{5, 3, 20, 15}, b{2, 4, 9, 6};
  CHECK(crop(crop(img, a), b) == crop(img, Rect{a.x + b.x, a.y + b.y, b.w, b.h}));
}

TEST_CASE("block split tiles the patch") {
  const auto even = split_blocks(random_image(10, 10, 1));
  for (const GrayImage& blk : even) {
    CHECK(blk.width() == 5);
    CHECK(blk.height() == 5);
  }
  const GrayImage odd = random_image(11, 11, 2);
  const auto q = split_blocks(odd);
  CHECK(q[0].width() == 5);
  CHECK(q[1].width() == 6);
  CHECK(q[2].height() == 6);
  CHECK(q[3].width() == 6);
  GrayImage back(11, 11);
  const std::array<std::pair<int, int>, 4> origin = {{{0, 0}, {5, 0}, {0, 5}, {5, 5}}};
  for (std::size_t i = 0; i < 4; ++i)
    for (int y = 0; y < q[i].height(); ++y)
      for (int x = 0; x < q[i].width(); ++x) back.at(origin[i].first + x, origin[i].second + y) = q[i].at(x, y);
  CHECK(back == odd);
  CHECK_THROWS(split_blocks(GrayImage(1, 5)));
}

TEST_CASE("layout text and overlay") {
  const PatchLayout p = layout_patches(symmetric_set(96), 96);
  const std::string text = format_layout(p);
  CHECK(text.rfind("P1 ", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 19);
  const GrayImage over = draw_layout(GrayImage(96, 96, 0), p);
  CHECK(over.at(p.patch(16).x, p.patch(16).y) == 255);
}

}  // TEST_SUITE
