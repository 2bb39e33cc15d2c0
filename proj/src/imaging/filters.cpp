#include "fer/image.hpp"

#include <algorithm>
#include <array>
#include <deque>
#include <limits>

namespace fer {

namespace {

// Row pointers with replicate-edge clamping in y.
struct RowTriple {
  const std::uint8_t* above;
  const std::uint8_t* mid;
  const std::uint8_t* below;
};

RowTriple rows_around(const GrayImage& img, int y) {
  const int h = img.height();
  return {img.row(y > 0 ? y - 1 : 0), img.row(y), img.row(y + 1 < h ? y + 1 : h - 1)};
}

}  // namespace

GrayImage gaussian_blur_3x3(const GrayImage& img) {
  const int w = img.width();
  const int h = img.height();
  GrayImage out(w, h);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    const RowTriple r = rows_around(img, y);
    std::uint8_t* dst = out.row(y);
    for (int x = 0; x < w; ++x) {
      const int xl = x > 0 ? x - 1 : 0;
      const int xr = x + 1 < w ? x + 1 : w - 1;
      const int s = r.above[xl] + 2 * r.above[x] + r.above[xr] +
                    2 * (r.mid[xl] + 2 * r.mid[x] + r.mid[xr]) +
                    r.below[xl] + 2 * r.below[x] + r.below[xr];
      dst[x] = static_cast<std::uint8_t>((s + 8) >> 4);
    }
  }
  return out;
}

GrayImage sobel_horizontal(const GrayImage& img) {
  const int w = img.width();
  const int h = img.height();
  GrayImage out(w, h);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    const RowTriple r = rows_around(img, y);
    std::uint8_t* dst = out.row(y);
    for (int x = 0; x < w; ++x) {
      const int xl = x > 0 ? x - 1 : 0;
      const int xr = x + 1 < w ? x + 1 : w - 1;
      const int g = (r.below[xl] + 2 * r.below[x] + r.below[xr]) -
                    (r.above[xl] + 2 * r.above[x] + r.above[xr]);
      dst[x] = clamp_u8(g < 0 ? -g : g);
    }
  }
  return out;
}

IntegralImage integral(const GrayImage& img) {
  const int w = img.width();
  const int h = img.height();
  IntegralImage ii(w, h);
  // Row prefix sums are independent; the column pass runs on column blocks, row by row.
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    const std::uint8_t* src = img.row(y);
    std::int64_t acc = 0;
    for (int x = 0; x < w; ++x) {
      acc += src[x];
      ii.entry(x + 1, y + 1) = acc;
    }
  }
  constexpr int kBlock = 256;
  const int blocks = (w + kBlock - 1) / kBlock;
#pragma omp parallel for schedule(static)
  for (int b = 0; b < blocks; ++b) {
    const int x0 = 1 + b * kBlock;
    const int x1 = std::min(w, x0 + kBlock - 1);
    for (int y = 2; y <= h; ++y)
      for (int x = x0; x <= x1; ++x) ii.entry(x, y) += ii.entry(x, y - 1);
  }
  return ii;
}

IntegralImage squared_integral(const GrayImage& img) {
  const int w = img.width();
  const int h = img.height();
  IntegralImage ii(w, h);
  for (int y = 0; y < h; ++y) {
    const std::uint8_t* src = img.row(y);
    std::int64_t acc = 0;
    for (int x = 0; x < w; ++x) {
      acc += static_cast<std::int64_t>(src[x]) * src[x];
      ii.entry(x + 1, y + 1) = ii.entry(x + 1, y) + acc;
    }
  }
  return ii;
}

GrayImage equalize_histogram(const GrayImage& img) {
  std::array<std::int64_t, 256> hist{};
  for (std::uint8_t v : img.pixels()) ++hist[v];
  const std::int64_t n = static_cast<std::int64_t>(img.pixels().size());
  std::array<std::uint8_t, 256> lut{};
  std::int64_t cdf = 0;
  for (int v = 0; v < 256; ++v) {
    cdf += hist[v];
    // round(255 * cdf / n), half-up, in integers
    lut[v] = static_cast<std::uint8_t>((510 * cdf + n) / (2 * n));
  }
  GrayImage out(img.width(), img.height());
  auto src = img.pixels();
  auto dst = out.pixels();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = lut[src[i]];
  return out;
}

GrayImage resize(const GrayImage& img, int width, int height) {
  if (width < 1 || height < 1) throw std::invalid_argument("resize target must be >= 1x1");
  if (width == img.width() && height == img.height()) return img;
  const int sw = img.width();
  const int sh = img.height();
  const double fx = static_cast<double>(sw) / width;
  const double fy = static_cast<double>(sh) / height;

  struct Tap {
    int i0, i1;
    double t;
  };
  auto taps = [](int n_out, int n_in, double f) {
    std::vector<Tap> v(static_cast<std::size_t>(n_out));
    for (int o = 0; o < n_out; ++o) {
      double s = (o + 0.5) * f - 0.5;
      if (s < 0) s = 0;
      if (s > n_in - 1) s = n_in - 1;
      const int i0 = static_cast<int>(s);
      const int i1 = i0 + 1 < n_in ? i0 + 1 : i0;
      v[static_cast<std::size_t>(o)] = {i0, i1, s - i0};
    }
    return v;
  };
  const auto tx = taps(width, sw, fx);
  const auto ty = taps(height, sh, fy);

  GrayImage out(width, height);
  for (int y = 0; y < height; ++y) {
    const Tap& a = ty[static_cast<std::size_t>(y)];
    const std::uint8_t* r0 = img.row(a.i0);
    const std::uint8_t* r1 = img.row(a.i1);
    std::uint8_t* dst = out.row(y);
    for (int x = 0; x < width; ++x) {
      const Tap& b = tx[static_cast<std::size_t>(x)];
      const double top = r0[b.i0] + (r0[b.i1] - r0[b.i0]) * b.t;
      const double bot = r1[b.i0] + (r1[b.i1] - r1[b.i0]) * b.t;
      dst[x] = clamp_u8(round_half_up(top + (bot - top) * a.t));
    }
  }
  return out;
}

OtsuResult otsu_threshold(const GrayImage& img) {
  std::array<std::int64_t, 256> hist{};
  for (std::uint8_t v : img.pixels()) ++hist[v];
  const double n = static_cast<double>(img.pixels().size());

  int distinct = 0;
  int only = 0;
  double total = 0;
  for (int v = 0; v < 256; ++v) {
    if (hist[v]) {
      ++distinct;
      only = v;
    }
    total += static_cast<double>(v) * hist[v];
  }

  OtsuResult res{0, BinaryImage(img.width(), img.height())};
  if (distinct == 1) {
    res.threshold = only;
    return res;
  }

  // Between-class variance up to a constant factor:
  // (n * sum0 - w0 * total)^2 / (w0 * w1).
  double best = -1.0;
  double w0 = 0;
  double sum0 = 0;
  for (int t = 0; t < 256; ++t) {
    w0 += static_cast<double>(hist[t]);
    sum0 += static_cast<double>(t) * hist[t];
    const double w1 = n - w0;
    if (w0 == 0 || w1 == 0) continue;
    const double d = n * sum0 - w0 * total;
    const double score = d * d / (w0 * w1);
    if (score > best) {
      best = score;
      res.threshold = t;
    }
  }
  auto src = img.pixels();
  auto dst = res.out.pixels();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] > res.threshold ? 1 : 0;
  return res;
}

BinaryImage adaptive_threshold(const GrayImage& img, int window, int offset) {
  if (window < 3 || window % 2 == 0)
    throw std::invalid_argument("adaptive_threshold window must be odd and >= 3");
  const int w = img.width();
  const int h = img.height();
  const int r = window / 2;
  // Replicate-padded integral image so every window sum is a 4-entry lookup.
  GrayImage padded(w + 2 * r, h + 2 * r);
  for (int y = 0; y < padded.height(); ++y)
    for (int x = 0; x < padded.width(); ++x) padded.at(x, y) = img.clamped(x - r, y - r);
  const IntegralImage ii = integral(padded);
  const std::int64_t area = static_cast<std::int64_t>(window) * window;

  BinaryImage out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const std::int64_t s = ii.sum(x, y, window, window);
      // pixel < s/area - offset, exactly in integers
      out.at(x, y) = static_cast<std::int64_t>(img.at(x, y)) * area < s - offset * area ? 1 : 0;
    }
  return out;
}

BinaryImage dilate(const BinaryImage& img, int radius) {
  if (radius < 1) throw std::invalid_argument("dilation radius must be >= 1");
  const int w = img.width();
  const int h = img.height();
  // Separable: a square max filter is a row pass followed by a column pass.
  BinaryImage tmp(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      std::uint8_t v = 0;
      for (int k = std::max(0, x - radius); k <= std::min(w - 1, x + radius) && !v; ++k) v = img.at(k, y);
      tmp.at(x, y) = v;
    }
  BinaryImage out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      std::uint8_t v = 0;
      for (int k = std::max(0, y - radius); k <= std::min(h - 1, y + radius) && !v; ++k) v = tmp.at(x, k);
      out.at(x, y) = v;
    }
  return out;
}

std::vector<Region> connected_components(const BinaryImage& img, Connectivity connectivity) {
  const int w = img.width();
  const int h = img.height();
  std::vector<int> label(static_cast<std::size_t>(w) * h, 0);
  std::vector<Region> regions;
  const bool eight = connectivity == Connectivity::eight;
  std::deque<PixelCoord> queue;

  for (int y0 = 0; y0 < h; ++y0)
    for (int x0 = 0; x0 < w; ++x0) {
      const std::size_t i0 = static_cast<std::size_t>(y0) * w + x0;
      if (!img.at(x0, y0) || label[i0]) continue;
      Region reg;
      reg.label = static_cast<int>(regions.size()) + 1;
      label[i0] = reg.label;
      queue.push_back({x0, y0});
      while (!queue.empty()) {
        const PixelCoord p = queue.front();
        queue.pop_front();
        reg.pixels.push_back(p);
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            if (dx == 0 && dy == 0) continue;
            if (!eight && dx != 0 && dy != 0) continue;
            const int nx = p.x + dx;
            const int ny = p.y + dy;
            if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
            const std::size_t ni = static_cast<std::size_t>(ny) * w + nx;
            if (!img.at(nx, ny) || label[ni]) continue;
            label[ni] = reg.label;
            queue.push_back({nx, ny});
          }
      }
      std::sort(reg.pixels.begin(), reg.pixels.end(), [](const PixelCoord& a, const PixelCoord& b) {
        return a.y != b.y ? a.y < b.y : a.x < b.x;
      });
      int minx = w, miny = h, maxx = -1, maxy = -1;
      for (const PixelCoord& p : reg.pixels) {
        minx = std::min(minx, p.x);
        maxx = std::max(maxx, p.x);
        miny = std::min(miny, p.y);
        maxy = std::max(maxy, p.y);
      }
      reg.area = static_cast<long long>(reg.pixels.size());
      reg.box = {minx, miny, maxx - minx + 1, maxy - miny + 1};
      regions.push_back(std::move(reg));
    }
  return regions;
}

GrayImage to_gray(const BinaryImage& bits) {
  GrayImage out(bits.width(), bits.height());
  auto src = bits.pixels();
  auto dst = out.pixels();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] ? 255 : 0;
  return out;
}

namespace serial {

GrayImage gaussian_blur_3x3(const GrayImage& img) {
  static constexpr int k[3][3] = {{1, 2, 1}, {2, 4, 2}, {1, 2, 1}};
  GrayImage out(img.width(), img.height());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) {
      int s = 0;
      for (int j = -1; j <= 1; ++j)
        for (int i = -1; i <= 1; ++i) s += k[j + 1][i + 1] * img.clamped(x + i, y + j);
      out.at(x, y) = static_cast<std::uint8_t>(round_half_up(s / 16.0));
    }
  return out;
}

GrayImage sobel_horizontal(const GrayImage& img) {
  static constexpr int k[3][3] = {{-1, -2, -1}, {0, 0, 0}, {1, 2, 1}};
  GrayImage out(img.width(), img.height());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) {
      int s = 0;
      for (int j = -1; j <= 1; ++j)
        for (int i = -1; i <= 1; ++i) s += k[j + 1][i + 1] * img.clamped(x + i, y + j);
      out.at(x, y) = clamp_u8(std::abs(s));
    }
  return out;
}

IntegralImage integral(const GrayImage& img) {
  IntegralImage ii(img.width(), img.height());
  for (int y = 1; y <= img.height(); ++y)
    for (int x = 1; x <= img.width(); ++x)
      ii.entry(x, y) = img.at(x - 1, y - 1) + ii.entry(x - 1, y) + ii.entry(x, y - 1) - ii.entry(x - 1, y - 1);
  return ii;
}

}  // namespace serial

}  // namespace fer
