#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <algorithm>
#include <vector>

namespace fer {

/// Axis-aligned pixel rectangle: top-left corner plus extent.
struct Rect {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  int right() const noexcept { return x + w; }
  int bottom() const noexcept { return y + h; }
  long long area() const noexcept { return static_cast<long long>(w) * h; }
  bool empty() const noexcept { return w <= 0 || h <= 0; }
  bool contains(const Rect& o) const noexcept {
    return o.x >= x && o.y >= y && o.right() <= right() && o.bottom() <= bottom();
  }
  bool contains(int px, int py) const noexcept {
    return px >= x && py >= y && px < right() && py < bottom();
  }
  friend bool operator==(const Rect&, const Rect&) = default;
};

using BoundingBox = Rect;

struct Point2 {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point2&, const Point2&) = default;
};

/// Round half-up to the nearest integer. Used wherever intensities or pixel
/// coordinates are produced from real values.
inline int round_half_up(double v) noexcept { return static_cast<int>(std::floor(v + 0.5)); }

inline std::uint8_t clamp_u8(int v) noexcept {
  return static_cast<std::uint8_t>(v < 0 ? 0 : (v > 255 ? 255 : v));
}

struct GrayTag {};
struct BinaryTag {};
struct LabelTag {};

/// Row-major 8-bit raster. The tag keeps grayscale, binary and LBP label
/// rasters from being mixed up; storage is identical.
template <typename Tag>
class Plane {
 public:
  Plane() = default;
  Plane(int width, int height, std::uint8_t fill = 0) : w_(width), h_(height) {
    check_dims(width, height);
    data_.assign(static_cast<std::size_t>(width) * height, fill);
  }
  Plane(int width, int height, std::vector<std::uint8_t> values)
      : w_(width), h_(height), data_(std::move(values)) {
    check_dims(width, height);
    if (data_.size() != static_cast<std::size_t>(width) * height)
      throw std::invalid_argument("raster buffer size does not match dimensions");
  }

  int width() const noexcept { return w_; }
  int height() const noexcept { return h_; }
  bool empty() const noexcept { return data_.empty(); }
  Rect bounds() const noexcept { return {0, 0, w_, h_}; }

  std::uint8_t at(int x, int y) const { return data_[index(x, y)]; }
  std::uint8_t& at(int x, int y) { return data_[index(x, y)]; }

  /// Border-replicated read.
  std::uint8_t clamped(int x, int y) const noexcept {
    x = x < 0 ? 0 : (x >= w_ ? w_ - 1 : x);
    y = y < 0 ? 0 : (y >= h_ ? h_ - 1 : y);
    return data_[static_cast<std::size_t>(y) * w_ + x];
  }

  const std::uint8_t* row(int y) const noexcept { return data_.data() + static_cast<std::size_t>(y) * w_; }
  std::uint8_t* row(int y) noexcept { return data_.data() + static_cast<std::size_t>(y) * w_; }

  std::span<const std::uint8_t> pixels() const noexcept { return data_; }
  std::span<std::uint8_t> pixels() noexcept { return data_; }

  friend bool operator==(const Plane&, const Plane&) = default;

 private:
  static void check_dims(int width, int height) {
    if (width < 1 || height < 1) throw std::invalid_argument("raster dimensions must be >= 1");
  }
  std::size_t index(int x, int y) const noexcept { return static_cast<std::size_t>(y) * w_ + x; }

  int w_ = 0;
  int h_ = 0;
  std::vector<std::uint8_t> data_;
};

using GrayImage = Plane<GrayTag>;
/// Pixels hold 0 or 1.
using BinaryImage = Plane<BinaryTag>;
/// LBP label raster, values 0..255.
using LabelImage = Plane<LabelTag>;

/// (width+1) x (height+1) table of cumulative sums; entry (x,y) is the sum of
/// all pixels with column < x and row < y.
class IntegralImage {
 public:
  IntegralImage() = default;
  IntegralImage(int width, int height) : w_(width), h_(height),
      table_(static_cast<std::size_t>(width + 1) * (height + 1), 0) {}

  int width() const noexcept { return w_; }
  int height() const noexcept { return h_; }
  std::int64_t entry(int x, int y) const noexcept {
    return table_[static_cast<std::size_t>(y) * (w_ + 1) + x];
  }
  std::int64_t& entry(int x, int y) noexcept {
    return table_[static_cast<std::size_t>(y) * (w_ + 1) + x];
  }
  /// Sum over [x, x+w) x [y, y+h). Zero-width or zero-height yields 0.
  std::int64_t sum(int x, int y, int w, int h) const noexcept {
    if (w <= 0 || h <= 0) return 0;
    return entry(x + w, y + h) - entry(x, y + h) - entry(x + w, y) + entry(x, y);
  }
  std::int64_t sum(const Rect& r) const noexcept { return sum(r.x, r.y, r.w, r.h); }

  friend bool operator==(const IntegralImage&, const IntegralImage&) = default;

 private:
  int w_ = 0;
  int h_ = 0;
  std::vector<std::int64_t> table_;
};

struct PixelCoord {
  int x = 0;
  int y = 0;
  friend bool operator==(const PixelCoord&, const PixelCoord&) = default;
};

/// One connected component of set pixels.
struct Region {
  int label = 0;  // 1-based, in first-encountered row-major order
  long long area = 0;
  Rect box;
  std::vector<PixelCoord> pixels;  // row-major order
};

enum class Connectivity { four = 4, eight = 8 };

struct OtsuResult {
  int threshold = 0;
  BinaryImage out;
};

// --- Filters. Border policy everywhere: replicate edge. -------------------

/// [1 2 1; 2 4 2; 1 2 1] / 16 with half-up rounding.
GrayImage gaussian_blur_3x3(const GrayImage& img);

/// CDF remap: v -> round(255 * cdf(v) / N).
GrayImage equalize_histogram(const GrayImage& img);

/// Bilinear resize with pixel-center alignment; same-size resize is the identity.
GrayImage resize(const GrayImage& img, int width, int height);

/// |[-1 -2 -1; 0 0 0; 1 2 1]| response clamped to 255 (horizontal edges).
GrayImage sobel_horizontal(const GrayImage& img);

/// Otsu's threshold. bits = pixel > threshold. A constant image yields its
/// own value as threshold and an all-false mask.
OtsuResult otsu_threshold(const GrayImage& img);

/// Bit set where pixel < local window mean - offset.
BinaryImage adaptive_threshold(const GrayImage& img, int window, int offset);

/// Square structuring element of side 2*radius+1.
BinaryImage dilate(const BinaryImage& img, int radius = 1);

std::vector<Region> connected_components(const BinaryImage& img,
                                         Connectivity connectivity = Connectivity::eight);

IntegralImage integral(const GrayImage& img);
/// Integral of squared intensities, used for window variance.
IntegralImage squared_integral(const GrayImage& img);

/// Pixel-exact crop; box must lie inside the raster.
template <typename Tag>
Plane<Tag> crop(const Plane<Tag>& img, const Rect& box) {
  if (box.empty() || !img.bounds().contains(box))
    throw std::out_of_range("crop box outside raster");
  Plane<Tag> out(box.w, box.h);
  for (int y = 0; y < box.h; ++y) {
    const std::uint8_t* src = img.row(box.y + y) + box.x;
    std::copy(src, src + box.w, out.row(y));
  }
  return out;
}

/// Binary mask as a 0/255 grayscale image.
GrayImage to_gray(const BinaryImage& bits);

/// Serial reference kernels. Straightforward per-pixel code kept as the
/// oracle for the OpenMP kernels above and as the benchmark baseline.
namespace serial {
GrayImage gaussian_blur_3x3(const GrayImage& img);
GrayImage sobel_horizontal(const GrayImage& img);
IntegralImage integral(const GrayImage& img);
}  // namespace serial

}  // namespace fer
