#include <algorithm>
#include <cmath>
#include <numeric>

#include "fer/detection.hpp"

namespace fer {

namespace {

struct ScaledRect {
  int x, y, w, h;
  double weight;
};

// Canonical rectangle mapped into a window of the given size.
ScaledRect scale_rect(const HaarRect& r, const HaarCascade& c, const Rect& window) {
  const double sx = static_cast<double>(window.w) / c.window_w;
  const double sy = static_cast<double>(window.h) / c.window_h;
  int x = round_half_up(r.x * sx);
  int y = round_half_up(r.y * sy);
  int w = std::max(1, round_half_up(r.w * sx));
  int h = std::max(1, round_half_up(r.h * sy));
  x = std::min(x, window.w - 1);
  y = std::min(y, window.h - 1);
  w = std::min(w, window.w - x);
  h = std::min(h, window.h - y);
  return {window.x + x, window.y + y, w, h, r.weight};
}

double area_ratio(const HaarCascade& c, const Rect& window) {
  return static_cast<double>(window.w) * window.h / (static_cast<double>(c.window_w) * c.window_h);
}

double window_sigma(std::int64_t s, std::int64_t sq, long long n) {
  const double mean = static_cast<double>(s) / n;
  const double var = static_cast<double>(sq) / n - mean * mean;
  return std::max(1.0, std::sqrt(std::max(0.0, var)));
}

double leaf(const WeakClassifier& wk, double f) { return f < wk.threshold ? wk.left : wk.right; }

std::int64_t naive_sum(const GrayImage& img, int x, int y, int w, int h) {
  std::int64_t s = 0;
  for (int j = y; j < y + h; ++j)
    for (int i = x; i < x + w; ++i) s += img.at(i, j);
  return s;
}

std::int64_t naive_sqsum(const GrayImage& img, const Rect& r) {
  std::int64_t s = 0;
  for (int j = r.y; j < r.bottom(); ++j)
    for (int i = r.x; i < r.right(); ++i) s += static_cast<std::int64_t>(img.at(i, j)) * img.at(i, j);
  return s;
}

}  // namespace

double feature_value(const HaarCascade& c, const WeakClassifier& wk, const IntegralImage& sum,
                     const IntegralImage& sqsum, const Rect& window) {
  const double sigma = window_sigma(sum.sum(window), sqsum.sum(window), window.area());
  double acc = 0.0;
  for (const HaarRect& r : wk.rects) {
    const ScaledRect sr = scale_rect(r, c, window);
    acc += sr.weight * static_cast<double>(sum.sum(sr.x, sr.y, sr.w, sr.h));
  }
  return acc / (area_ratio(c, window) * sigma);
}

bool evaluate_window(const HaarCascade& c, const IntegralImage& sum, const IntegralImage& sqsum,
                     const Rect& window) {
  for (const CascadeStage& st : c.stages) {
    double total = 0.0;
    for (const WeakClassifier& wk : st.weak) total += leaf(wk, feature_value(c, wk, sum, sqsum, window));
    if (total < st.threshold) return false;
  }
  return true;
}

std::vector<ScaleLevel> scan_plan(const HaarCascade& c, const Rect& roi, const DetectParams& params) {
  std::vector<ScaleLevel> plan;
  if (roi.empty()) return plan;
  const int min_size = params.min_size > 0 ? params.min_size : std::min(roi.w, roi.h) / 5;
  const double step = params.scale_step > 1.0 ? params.scale_step : 1.1;
  double s = std::max(1.0, static_cast<double>(min_size) / std::min(c.window_w, c.window_h));
  for (;; s *= step) {
    const int ww = round_half_up(c.window_w * s);
    const int wh = round_half_up(c.window_h * s);
    if (ww > roi.w || wh > roi.h) break;
    if (!plan.empty() && plan.back().width == ww && plan.back().height == wh) continue;
    plan.push_back({s, ww, wh, std::max(1, round_half_up(0.5 * s))});
  }
  return plan;
}

std::vector<Rect> scan_windows(const GrayImage& img, const HaarCascade& c, const Rect& roi,
                               const DetectParams& params) {
  const IntegralImage sum = integral(img);
  const IntegralImage sq = squared_integral(img);
  std::vector<Rect> found;
  for (const ScaleLevel& lv : scan_plan(c, roi, params)) {
    const int ny = (roi.h - lv.height) / lv.stride + 1;
    const int nx = (roi.w - lv.width) / lv.stride + 1;
    std::vector<std::vector<Rect>> rows(static_cast<std::size_t>(ny));
#pragma omp parallel for schedule(dynamic)
    for (int j = 0; j < ny; ++j) {
      for (int i = 0; i < nx; ++i) {
        const Rect win{roi.x + i * lv.stride, roi.y + j * lv.stride, lv.width, lv.height};
        if (evaluate_window(c, sum, sq, win)) rows[static_cast<std::size_t>(j)].push_back(win);
      }
    }
    for (auto& r : rows) found.insert(found.end(), r.begin(), r.end());
  }
  return found;
}

std::vector<Rect> group_rectangles(const std::vector<Rect>& cand, int min_neighbors, double eps) {
  const std::size_t n = cand.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  auto similar = [eps](const Rect& a, const Rect& b) {
    const double delta = eps * (std::min(a.w, b.w) + std::min(a.h, b.h)) * 0.5;
    return std::abs(a.x - b.x) <= delta && std::abs(a.y - b.y) <= delta &&
           std::abs(a.right() - b.right()) <= delta && std::abs(a.bottom() - b.bottom()) <= delta;
  };
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (similar(cand[i], cand[j])) {
        const std::size_t a = find(i), b = find(j);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
      }

  struct Acc {
    double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
    int count = 0;
  };
  std::vector<Acc> acc(n);
  for (std::size_t i = 0; i < n; ++i) {
    Acc& a = acc[find(i)];
    a.x0 += cand[i].x;
    a.y0 += cand[i].y;
    a.x1 += cand[i].right();
    a.y1 += cand[i].bottom();
    ++a.count;
  }
  std::vector<Rect> out;
  for (std::size_t i = 0; i < n; ++i) {
    const Acc& a = acc[i];
    if (a.count == 0 || a.count < min_neighbors) continue;
    // Rounded mean edges; a mean of edges inside the ROI stays inside it.
    const int x0 = round_half_up(a.x0 / a.count);
    const int y0 = round_half_up(a.y0 / a.count);
    const int x1 = round_half_up(a.x1 / a.count);
    const int y1 = round_half_up(a.y1 / a.count);
    out.push_back({x0, y0, x1 - x0, y1 - y0});
  }
  std::stable_sort(out.begin(), out.end(), [](const Rect& a, const Rect& b) {
    if (a.area() != b.area()) return a.area() > b.area();
    return a.y != b.y ? a.y < b.y : a.x < b.x;
  });
  return out;
}

std::vector<BoundingBox> detect(const GrayImage& img, const HaarCascade& c, const Rect& roi,
                                const DetectParams& params) {
  const Rect clipped{std::max(0, roi.x), std::max(0, roi.y),
                     std::min(roi.right(), img.width()) - std::max(0, roi.x),
                     std::min(roi.bottom(), img.height()) - std::max(0, roi.y)};
  if (clipped.empty()) return {};
  return group_rectangles(scan_windows(img, c, clipped, params), params.min_neighbors, params.group_eps);
}

Rect fractional_subrect(const BoundingBox& box, double left, double top, double right, double bottom) {
  const int x0 = static_cast<int>(std::floor(left * box.w));
  const int x1 = static_cast<int>(std::floor(right * box.w));
  const int y0 = static_cast<int>(std::floor(top * box.h));
  const int y1 = static_cast<int>(std::floor(bottom * box.h));
  return {box.x + x0, box.y + y0, x1 - x0, y1 - y0};
}

Rect left_eye_roi(const BoundingBox& face) { return fractional_subrect(face, 0.05, 0.20, 0.50, 0.55); }
Rect right_eye_roi(const BoundingBox& face) { return fractional_subrect(face, 0.50, 0.20, 0.95, 0.55); }
Rect nose_roi(const BoundingBox& face) { return fractional_subrect(face, 0.25, 0.35, 0.75, 0.75); }

namespace {
std::optional<BoundingBox> largest(const std::vector<BoundingBox>& boxes) {
  if (boxes.empty()) return std::nullopt;
  return boxes.front();
}
}  // namespace

std::optional<BoundingBox> detect_face(const GrayImage& img, const HaarCascade& cascade,
                                       const DetectParams& params) {
  return largest(detect(img, cascade, img.bounds(), params));
}

std::optional<BoundingBox> detect_eye(const GrayImage& img, EyeSide side, const BoundingBox& face,
                                      const HaarCascade& cascade, const DetectParams& params) {
  const Rect roi = side == EyeSide::left ? left_eye_roi(face) : right_eye_roi(face);
  return largest(detect(img, cascade, roi, params));
}

std::optional<BoundingBox> detect_nose(const GrayImage& img, const BoundingBox& face,
                                       const HaarCascade& cascade, const DetectParams& params) {
  return largest(detect(img, cascade, nose_roi(face), params));
}

namespace serial {

double feature_value(const GrayImage& img, const HaarCascade& c, const WeakClassifier& wk,
                     const Rect& window) {
  const double sigma =
      window_sigma(naive_sum(img, window.x, window.y, window.w, window.h), naive_sqsum(img, window), window.area());
  double acc = 0.0;
  for (const HaarRect& r : wk.rects) {
    const ScaledRect sr = scale_rect(r, c, window);
    acc += sr.weight * static_cast<double>(naive_sum(img, sr.x, sr.y, sr.w, sr.h));
  }
  return acc / (area_ratio(c, window) * sigma);
}

std::vector<Rect> scan_windows(const GrayImage& img, const HaarCascade& c, const Rect& roi,
                               const DetectParams& params) {
  std::vector<Rect> found;
  for (const ScaleLevel& lv : scan_plan(c, roi, params))
    for (int y = roi.y; y + lv.height <= roi.bottom(); y += lv.stride)
      for (int x = roi.x; x + lv.width <= roi.right(); x += lv.stride) {
        const Rect win{x, y, lv.width, lv.height};
        bool pass = true;
        for (const CascadeStage& st : c.stages) {
          double total = 0.0;
          for (const WeakClassifier& wk : st.weak) total += leaf(wk, feature_value(img, c, wk, win));
          if (total < st.threshold) {
            pass = false;
            break;
          }
        }
        if (pass) found.push_back(win);
      }
  return found;
}

}  // namespace serial

}  // namespace fer
