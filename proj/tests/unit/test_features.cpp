#include <bit>
#include <set>

#include "doctest.h"
#include "fer/lbp.hpp"
#include "fer/patches.hpp"
#include "support.hpp"

using namespace fer;
using testing::random_image;

namespace {

// Independent oracle: explicit neighbour coordinates, bit by bit.
int lbp_oracle(const GrayImage& img, int x, int y) {
  const int c = img.at(x, y);
  const int nx[8] = {x + 1, x + 1, x, x - 1, x - 1, x - 1, x, x + 1};
  const int ny[8] = {y, y - 1, y - 1, y - 1, y, y + 1, y + 1, y + 1};
  int code = 0;
  for (int n = 0; n < 8; ++n)
    if (img.at(nx[n], ny[n]) >= c) code |= 1 << n;
  return code;
}

int transitions_oracle(int label) {
  int t = 0;
  for (int n = 0; n < 8; ++n) t += ((label >> n) & 1) != ((label >> ((n + 1) % 8)) & 1);
  return t;
}

}  // namespace

TEST_SUITE("features") {

TEST_CASE("lbp_code examples") {
  const std::array<std::uint8_t, 8> eq = {5, 5, 5, 5, 5, 5, 5, 5};
  CHECK(lbp_code(5, eq) == 255);
  const std::array<std::uint8_t, 8> low = {1, 2, 3, 4, 0, 1, 2, 3};
  CHECK(lbp_code(9, low) == 0);
  const std::array<std::uint8_t, 8> mixed = {6, 2, 7, 3, 5, 1, 8, 0};
  CHECK(lbp_code(5, mixed) == 85);
}

TEST_CASE("lbp_map matches the per-pixel oracle") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const GrayImage img = random_image(10 + static_cast<int>(seed), 10, seed, 0, 8);
    const LabelImage m = lbp_map(img);
    REQUIRE(m.width() == img.width() - 2);
    REQUIRE(m.height() == 8);
    for (int y = 0; y < m.height(); ++y)
      for (int x = 0; x < m.width(); ++x) CHECK(m.at(x, y) == lbp_oracle(img, x + 1, y + 1));
    CHECK(m == serial::lbp_map(img));
  }
  CHECK(lbp_map(GrayImage(7, 7, 42)) == LabelImage(5, 5, 255));
  CHECK(lbp_map(random_image(3, 3, 9)).width() == 1);
  CHECK_THROWS(lbp_map(GrayImage(2, 5)));
}

TEST_CASE("lbp_map is invariant to an intensity offset") {
  const GrayImage img = random_image(20, 20, 12, 0, 200);
  GrayImage up = img;
  for (auto& p : up.pixels()) p = static_cast<std::uint8_t>(p + 40);
  CHECK(lbp_map(up) == lbp_map(img));
}

TEST_CASE("uniformity") {
  CHECK(uniformity(0b00000001) == 2);
  CHECK(uniformity(0b00100110) == 4);
  CHECK(uniformity(0) == 0);
  CHECK(uniformity(255) == 0);
  for (int l = 0; l < 256; ++l) CHECK(uniformity(static_cast<std::uint8_t>(l)) == transitions_oracle(l));
}

TEST_CASE("bin indices") {
  CHECK(bin_index(200, LbpVariant::bins32) == 25);
  CHECK(bin_index(207, LbpVariant::bins32) == 25);
  CHECK(bin_index(200, LbpVariant::bins16) == 12);
  CHECK(bin_index(200, LbpVariant::bins256) == 200);
  CHECK(bin_index(0b00000111, LbpVariant::riu2) == 3);
  CHECK(bin_index(0b01010101, LbpVariant::riu2) == 9);
  CHECK(bin_count(LbpVariant::u2) == 59);
  CHECK(bin_count(LbpVariant::riu2) == 10);

  std::set<int> uniform_bins;
  int nonuniform = 0;
  int prev = -1;
  for (int l = 0; l < 256; ++l) {
    const int b = bin_index(static_cast<std::uint8_t>(l), LbpVariant::u2);
    if (transitions_oracle(l) <= 2) {
      CHECK(b > prev);  // ascending label order
      prev = b;
      uniform_bins.insert(b);
    } else {
      CHECK(b == 58);
      ++nonuniform;
    }
  }
  CHECK(uniform_bins.size() == 58);
  CHECK(*uniform_bins.rbegin() == 57);
  CHECK(nonuniform == 198);
}

TEST_CASE("riu2 is rotation invariant") {
  for (int l = 0; l < 256; ++l) {
    const auto label = static_cast<std::uint8_t>(l);
    for (int k = 1; k < 8; ++k)
      CHECK(bin_index(std::rotl(label, k), LbpVariant::riu2) == bin_index(label, LbpVariant::riu2));
  }
}

TEST_CASE("histograms equal a tally oracle") {
  const GrayImage img = random_image(17, 13, 21);
  const LabelImage m = lbp_map(img);
  for (LbpVariant v : {LbpVariant::bins256, LbpVariant::bins32, LbpVariant::bins16, LbpVariant::u2, LbpVariant::riu2}) {
    std::vector<std::int64_t> tally(static_cast<std::size_t>(bin_count(v)), 0);
    for (auto l : m.pixels()) ++tally[static_cast<std::size_t>(bin_index(l, v))];
    CHECK(histogram_counts(m, v) == tally);
    std::int64_t total = 0;
    for (auto t : tally) total += t;
    CHECK(total == 15 * 11);
    const auto h = histogram(m, v);
    double sum = 0;
    for (double x : h) sum += x;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
  const auto flat = histogram(lbp_map(GrayImage(5, 5, 7)), LbpVariant::bins256);
  CHECK(flat[255] == 1.0);
}

TEST_CASE("feature vector lengths and layout") {
  const GrayImage face = random_image(96, 96, 31);
  LandmarkSet lm;
  for (LandmarkId id : kAllLandmarks) lm[id].pos = anthropometric_point(id, 96);
  const std::vector<int> four = {2, 5, 9, 16};
  const FeatureVector v = feature_vector(face, lm, four, LbpVariant::bins16);
  CHECK(v.values.size() == 256);
  std::vector<int> all(19);
  for (int k = 0; k < 19; ++k) all[static_cast<std::size_t>(k)] = k + 1;
  CHECK(feature_vector(face, lm, all, LbpVariant::u2).values.size() == 4484);

  for (std::size_t i = 0; i < v.values.size(); i += 37) {
    const auto c = v.layout.cell(i);
    CHECK(v.layout.index(static_cast<std::size_t>(std::find(four.begin(), four.end(), c.patch) - four.begin()),
                         c.block, c.bin) == i);
  }
  for (std::size_t blk = 0; blk < 16; ++blk) {
    double s = 0;
    for (std::size_t b = 0; b < 16; ++b) s += v.values[blk * 16 + b];
    CHECK(s == doctest::Approx(1.0));
  }
  CHECK(feature_vector(face, lm, four, LbpVariant::bins16).values == v.values);

  const PatchLayout layout = layout_patches(lm, 96);
  const FaceDescriptor d = describe_face(face, layout, LbpVariant::bins16);
  CHECK(assemble_features(d, four).values == v.values);
  const auto p9 = patch_descriptor(face, layout.patch(9), LbpVariant::bins16);
  CHECK(std::equal(p9.begin(), p9.end(), v.values.begin() + 128));
  CHECK(feature_csv_header(v.layout).rfind("P2_b0_h0,P2_b0_h1", 0) == 0);
}

}  // TEST_SUITE
