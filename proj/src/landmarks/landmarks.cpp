#include "fer/landmarks.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "fer/error.hpp"

namespace fer {

namespace {

constexpr std::array<std::string_view, kLandmarkCount> kNames = {
    "left_eye", "right_eye", "nose", "lip_left", "lip_right", "brow_inner_left", "brow_inner_right"};

// Fractions of R: (x, y).
constexpr std::array<std::array<double, 2>, kLandmarkCount> kAnthropometric = {{
    {0.30, 0.35},
    {0.70, 0.35},
    {0.50, 0.55},
    {0.35, 0.78},
    {0.65, 0.78},
    {0.40, 0.25},
    {0.60, 0.25},
}};

Rect clip(Rect r, int w, int h) {
  const int x0 = std::clamp(r.x, 0, w);
  const int y0 = std::clamp(r.y, 0, h);
  const int x1 = std::clamp(r.right(), 0, w);
  const int y1 = std::clamp(r.bottom(), 0, h);
  return {x0, y0, std::max(0, x1 - x0), std::max(0, y1 - y0)};
}

// Rows [y0, y1) x cols [x0, x1) with real bounds rounded half-up.
Rect real_rect(double x0, double y0, double x1, double y1) {
  const int ix0 = round_half_up(x0), iy0 = round_half_up(y0);
  return {ix0, iy0, round_half_up(x1) - ix0, round_half_up(y1) - iy0};
}

// Shared tail of the corner detectors: edge map -> Otsu -> dilation ->
// components, with spurious regions removed.
std::vector<Region> edge_components(const GrayImage& edge_input, int resolution, const CornerParams& p) {
  const GrayImage edges = sobel_horizontal(edge_input);
  const OtsuResult th = otsu_threshold(edges);
  const BinaryImage grown = dilate(th.out, p.dilate_radius);
  std::vector<Region> regions = connected_components(grown, Connectivity::eight);
  const double area_min = p.area_fraction * resolution * resolution;
  std::erase_if(regions, [area_min](const Region& r) { return static_cast<double>(r.area) < area_min; });
  // Dilation only links fragments; corners come from the original edge pixels.
  for (Region& r : regions) {
    std::erase_if(r.pixels, [&](const PixelCoord& q) { return th.out.at(q.x, q.y) == 0; });
    int x0 = std::numeric_limits<int>::max(), y0 = x0, x1 = -1, y1 = -1;
    for (const PixelCoord& q : r.pixels) {
      x0 = std::min(x0, q.x);
      y0 = std::min(y0, q.y);
      x1 = std::max(x1, q.x);
      y1 = std::max(y1, q.y);
    }
    r.box = {x0, y0, x1 - x0 + 1, y1 - y0 + 1};
  }
  return regions;
}

// Mean y over the pixels of a region lying in column x.
double column_mean_y(std::span<const Region* const> regions, int x) {
  double sum = 0;
  int n = 0;
  for (const Region* r : regions)
    for (const PixelCoord& p : r->pixels)
      if (p.x == x) {
        sum += p.y;
        ++n;
      }
  return sum / n;
}

std::pair<Point2, Point2> horizontal_extremes(std::span<const Region* const> regions) {
  int xl = std::numeric_limits<int>::max();
  int xr = std::numeric_limits<int>::min();
  for (const Region* r : regions) {
    xl = std::min(xl, r->box.x);
    xr = std::max(xr, r->box.right() - 1);
  }
  return {{static_cast<double>(xl), column_mean_y(regions, xl)},
          {static_cast<double>(xr), column_mean_y(regions, xr)}};
}

}  // namespace

std::string_view landmark_name(LandmarkId id) { return kNames[static_cast<std::size_t>(id)]; }

std::optional<LandmarkId> parse_landmark_name(std::string_view name) {
  for (std::size_t i = 0; i < kNames.size(); ++i)
    if (kNames[i] == name) return static_cast<LandmarkId>(i);
  return std::nullopt;
}

bool LandmarkSet::all_detected() const {
  return std::all_of(points_.begin(), points_.end(),
                     [](const Landmark& l) { return l.source == Provenance::detected; });
}

bool LandmarkSet::valid_for(int size) const {
  for (const Landmark& l : points_)
    if (!(l.pos.x >= 0 && l.pos.y >= 0 && l.pos.x <= size - 1 && l.pos.y <= size - 1)) return false;
  return pos(LandmarkId::left_eye).x < pos(LandmarkId::right_eye).x &&
         pos(LandmarkId::lip_left).x < pos(LandmarkId::lip_right).x;
}

// --- alignment -------------------------------------------------------------

Point2 AlignmentTransform::apply(Point2 p) const {
  const double c = std::cos(-angle), s = std::sin(-angle);
  const double dx = p.x - center.x, dy = p.y - center.y;
  const double qx = center.x + c * dx - s * dy;
  const double qy = center.y + s * dx + c * dy;
  // Inverse of the pixel-centre mapping used by resize().
  return {(qx - face.x + 0.5) * resolution / face.w - 0.5, (qy - face.y + 0.5) * resolution / face.h - 0.5};
}

GrayImage rotate_about(const GrayImage& img, Point2 center, double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  GrayImage out(img.width(), img.height());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) {
      // Output pixel q samples source p = center + Rot(angle) (q - center).
      const double dx = x - center.x, dy = y - center.y;
      double sx = center.x + c * dx - s * dy;
      double sy = center.y + s * dx + c * dy;
      sx = std::clamp(sx, 0.0, img.width() - 1.0);
      sy = std::clamp(sy, 0.0, img.height() - 1.0);
      const int x0 = static_cast<int>(sx), y0 = static_cast<int>(sy);
      const int x1 = std::min(x0 + 1, img.width() - 1), y1 = std::min(y0 + 1, img.height() - 1);
      const double tx = sx - x0, ty = sy - y0;
      const double top = img.at(x0, y0) + (img.at(x1, y0) - img.at(x0, y0)) * tx;
      const double bot = img.at(x0, y1) + (img.at(x1, y1) - img.at(x0, y1)) * tx;
      out.at(x, y) = clamp_u8(round_half_up(top + (bot - top) * ty));
    }
  return out;
}

Alignment align_face(const GrayImage& img, const BoundingBox& face, Point2 left_eye, Point2 right_eye,
                     int resolution) {
  if (resolution < 1) throw std::invalid_argument("resolution must be positive");
  if (left_eye == right_eye) throw DataError("cannot align: eye positions coincide");
  if (left_eye.x > right_eye.x) std::swap(left_eye, right_eye);

  AlignmentTransform t;
  t.center = {(left_eye.x + right_eye.x) / 2.0, (left_eye.y + right_eye.y) / 2.0};
  t.angle = std::atan2(right_eye.y - left_eye.y, right_eye.x - left_eye.x);
  t.face = clip(face, img.width(), img.height());
  t.resolution = resolution;
  if (t.face.empty()) throw DataError("face box lies outside the image");

  const GrayImage upright = t.angle == 0.0 ? img : rotate_about(img, t.center, t.angle);
  GrayImage scaled = resize(crop(upright, t.face), resolution, resolution);
  return {equalize_histogram(scaled), t};
}

// --- corner detectors ------------------------------------------------------

Rect mouth_roi(Point2 nose, int resolution, const CornerParams& p) {
  const double r = resolution;
  return clip(real_rect(nose.x - p.mouth_half_width * r, nose.y + p.mouth_top * r,
                        nose.x + p.mouth_half_width * r, nose.y + p.mouth_bottom * r),
              resolution, resolution);
}

Rect brow_roi(Point2 eye, int resolution, const CornerParams& p) {
  const double r = resolution;
  return clip(real_rect(eye.x - p.brow_half_width * r, eye.y - p.brow_top * r, eye.x + p.brow_half_width * r,
                        eye.y - p.brow_bottom * r),
              resolution, resolution);
}

std::optional<CornerPair> detect_lip_corners(const GrayImage& face, Point2 nose, const CornerParams& p) {
  const int res = face.width();
  const Rect roi = mouth_roi(nose, res, p);
  if (roi.w < 3 || roi.h < 3) return std::nullopt;

  std::vector<Region> regions = edge_components(gaussian_blur_3x3(crop(face, roi)), res, p);
  if (regions.empty()) return std::nullopt;
  // Scan from the top; equal top rows prefer the larger component.
  std::stable_sort(regions.begin(), regions.end(), [](const Region& a, const Region& b) {
    if (a.box.y != b.box.y) return a.box.y < b.box.y;
    return a.area > b.area;
  });

  std::vector<const Region*> chosen{&regions[0]};
  auto [l, r] = horizontal_extremes(chosen);
  const double mid = (res - 1) / 2.0 - roi.x;
  const double spread = std::max(std::abs(l.x - mid), std::abs(r.x - mid));
  const double ratio = spread > 0 ? (r.x - l.x) / spread : std::numeric_limits<double>::infinity();

  CornerPair out;
  if (ratio < p.symmetry_ratio_min && regions.size() >= 2) {
    chosen.push_back(&regions[1]);
    std::tie(l, r) = horizontal_extremes(chosen);
    out.merged_two_components = true;
  }
  if (!(l.x < r.x)) return std::nullopt;
  out.left = {l.x + roi.x, l.y + roi.y};
  out.right = {r.x + roi.x, r.y + roi.y};
  return out;
}

namespace {

std::optional<Point2> inner_brow_corner(const GrayImage& face, Point2 eye, const CornerParams& p) {
  const int res = face.width();
  const Rect roi = brow_roi(eye, res, p);
  if (roi.w < 3 || roi.h < 3) return std::nullopt;

  int window = std::max(3, round_half_up(p.brow_window_fraction * res));
  if (window % 2 == 0) ++window;
  const GrayImage patch = gaussian_blur_3x3(crop(face, roi));
  const GrayImage dark = to_gray(adaptive_threshold(patch, window, p.brow_offset));
  const std::vector<Region> regions = edge_components(dark, res, p);
  if (regions.empty()) return std::nullopt;

  const Region* best = &regions[0];
  for (const Region& r : regions)
    if (r.area > best->area) best = &r;

  const double mid = (res - 1) / 2.0 - roi.x;
  double dmin = std::numeric_limits<double>::infinity();
  for (const PixelCoord& q : best->pixels) dmin = std::min(dmin, std::abs(q.x - mid));
  double sx = 0, sy = 0;
  int n = 0;
  for (const PixelCoord& q : best->pixels)
    if (std::abs(q.x - mid) == dmin) {
      sx += q.x;
      sy += q.y;
      ++n;
    }
  return Point2{sx / n + roi.x, sy / n + roi.y};
}

}  // namespace

std::pair<std::optional<Point2>, std::optional<Point2>> detect_eyebrow_corners(const GrayImage& face,
                                                                                Point2 left_eye,
                                                                                Point2 right_eye,
                                                                                const CornerParams& p) {
  return {inner_brow_corner(face, left_eye, p), inner_brow_corner(face, right_eye, p)};
}

// --- fallback and metric ---------------------------------------------------

Point2 anthropometric_fraction(LandmarkId id) {
  const auto& f = kAnthropometric[static_cast<std::size_t>(id)];
  return {f[0], f[1]};
}

Point2 anthropometric_point(LandmarkId id, int resolution) {
  const auto& f = kAnthropometric[static_cast<std::size_t>(id)];
  return {static_cast<double>(round_half_up(f[0] * resolution)),
          static_cast<double>(round_half_up(f[1] * resolution))};
}

std::vector<std::pair<LandmarkId, Point2>> anthropometric_fallback(int resolution,
                                                                   std::span<const LandmarkId> missing) {
  std::vector<std::pair<LandmarkId, Point2>> out;
  out.reserve(missing.size());
  for (LandmarkId id : missing) out.emplace_back(id, anthropometric_point(id, resolution));
  return out;
}

double landmark_error(const LandmarkSet& pred, const LandmarkSet& truth, std::span<const LandmarkId> ids) {
  const Point2 a = truth.pos(LandmarkId::left_eye);
  const Point2 b = truth.pos(LandmarkId::right_eye);
  const double s = std::hypot(a.x - b.x, a.y - b.y);
  if (s == 0.0) throw DataError("landmark_error: true eye pupils coincide");
  if (ids.empty()) throw std::invalid_argument("landmark_error: no landmarks selected");
  double total = 0.0;
  for (LandmarkId id : ids) {
    const Point2 p = pred.pos(id), t = truth.pos(id);
    total += std::hypot(p.x - t.x, p.y - t.y);
  }
  return total / (static_cast<double>(ids.size()) * s);
}

// --- file format -----------------------------------------------------------

LandmarkSet parse_landmarks(const std::string& text) {
  LandmarkSet set;
  std::array<bool, kLandmarkCount> seen{};
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string name;
    if (!(ls >> name)) continue;
    double x, y;
    if (!(ls >> x >> y)) throw ParseError("expected '<name> <x> <y>'", line_no);
    std::string extra;
    if (ls >> extra) throw ParseError("unexpected trailing field '" + extra + "'", line_no);
    const auto id = parse_landmark_name(name);
    if (!id) throw ParseError("unknown landmark '" + name + "'", line_no);
    const auto k = static_cast<std::size_t>(*id);
    if (seen[k]) throw ParseError("duplicate landmark '" + name + "'", line_no);
    seen[k] = true;
    set[*id] = {{x, y}, Provenance::detected};
  }
  for (std::size_t k = 0; k < seen.size(); ++k)
    if (!seen[k]) throw DataError("landmark file is missing '" + std::string(kNames[k]) + "'");
  return set;
}

LandmarkSet read_landmarks(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open landmark file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_landmarks(ss.str());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.detail(), e.line());
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::string format_landmarks(const LandmarkSet& set) {
  std::ostringstream out;
  out.precision(17);
  for (LandmarkId id : kAllLandmarks) out << landmark_name(id) << ' ' << set.pos(id).x << ' ' << set.pos(id).y << '\n';
  return out.str();
}

void write_landmarks(const std::filesystem::path& path, const LandmarkSet& set) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << format_landmarks(set);
}

GrayImage draw_crosses(const GrayImage& img, std::span<const Point2> points) {
  GrayImage out = img;
  for (const Point2& p : points) {
    const int cx = round_half_up(p.x), cy = round_half_up(p.y);
    for (int d = -1; d <= 1; ++d) {
      if (out.bounds().contains(cx + d, cy)) out.at(cx + d, cy) = 255;
      if (out.bounds().contains(cx, cy + d)) out.at(cx, cy + d) = 255;
    }
  }
  return out;
}

}  // namespace fer
