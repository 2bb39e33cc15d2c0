#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fer/image.hpp"

namespace fer {

enum class LandmarkId {
  left_eye,
  right_eye,
  nose,
  lip_left,
  lip_right,
  brow_inner_left,
  brow_inner_right,
};

inline constexpr int kLandmarkCount = 7;
inline constexpr std::array<LandmarkId, kLandmarkCount> kAllLandmarks = {
    LandmarkId::left_eye,  LandmarkId::right_eye,       LandmarkId::nose,
    LandmarkId::lip_left,  LandmarkId::lip_right,       LandmarkId::brow_inner_left,
    LandmarkId::brow_inner_right};

std::string_view landmark_name(LandmarkId id);
std::optional<LandmarkId> parse_landmark_name(std::string_view name);

enum class Provenance { detected, fallback };

struct Landmark {
  Point2 pos;
  Provenance source = Provenance::detected;
  friend bool operator==(const Landmark&, const Landmark&) = default;
};

/// The seven named points in aligned-face pixel coordinates. "Left" and
/// "right" are image left/right (viewer's perspective).
class LandmarkSet {
 public:
  Landmark& operator[](LandmarkId id) { return points_[static_cast<std::size_t>(id)]; }
  const Landmark& operator[](LandmarkId id) const { return points_[static_cast<std::size_t>(id)]; }
  Point2 pos(LandmarkId id) const { return (*this)[id].pos; }

  bool all_detected() const;
  /// left_eye.x < right_eye.x, lip_left.x < lip_right.x, all points inside a
  /// size x size raster.
  bool valid_for(int size) const;

  friend bool operator==(const LandmarkSet&, const LandmarkSet&) = default;

 private:
  std::array<Landmark, kLandmarkCount> points_{};
};

/// Square face raster at the canonical resolution with its landmarks.
struct AlignedFace {
  GrayImage image;
  LandmarkSet landmarks;
  int resolution() const { return image.width(); }
};

/// Similarity transform applied by align_face, for mapping source points.
struct AlignmentTransform {
  Point2 center;     // eye midpoint (source coordinates)
  double angle = 0;  // radians; source is rotated by -angle
  BoundingBox face;
  int resolution = 0;

  Point2 apply(Point2 p) const;
};

struct Alignment {
  GrayImage image;  // R x R, histogram-equalized
  AlignmentTransform transform;
};

/// Rotate about the eye midpoint so the eye line is horizontal, crop the face
/// box, resize to R x R, then equalize. Swapped eyes are reordered; coincident
/// eyes throw DataError.
Alignment align_face(const GrayImage& img, const BoundingBox& face, Point2 left_eye, Point2 right_eye,
                     int resolution);

/// Rotates the whole image by -angle about center, bilinear, replicate border.
GrayImage rotate_about(const GrayImage& img, Point2 center, double angle);

/// Tunables for the learning-free corner detectors. Defaults are fractions
/// of the face width R.
struct CornerParams {
  // Mouth search region relative to the nose.
  double mouth_top = 0.10;
  double mouth_bottom = 0.45;
  double mouth_half_width = 0.30;
  // Eyebrow search region relative to each eye.
  double brow_top = 0.25;
  double brow_bottom = 0.02;
  double brow_half_width = 0.15;
  // Components smaller than area_fraction * R^2 pixels are spurious.
  double area_fraction = 0.001;
  double symmetry_ratio_min = 1.2;
  int dilate_radius = 1;
  // Adaptive threshold applied before the edge step for eyebrows.
  double brow_window_fraction = 0.15;
  int brow_offset = 5;
};

struct CornerPair {
  Point2 left;
  Point2 right;
  bool merged_two_components = false;
};

/// Upper-lip corners: blur, horizontal Sobel, Otsu, dilation, connected
/// components, spurious-area removal, top-most component. When the corners
/// fail the bilateral-symmetry ratio the second component from the top is
/// merged in. Empty when no component survives.
std::optional<CornerPair> detect_lip_corners(const GrayImage& face, Point2 nose,
                                             const CornerParams& params = {});

/// Inner eyebrow corners, per side; a side is empty when nothing survives.
std::pair<std::optional<Point2>, std::optional<Point2>> detect_eyebrow_corners(
    const GrayImage& face, Point2 left_eye, Point2 right_eye, const CornerParams& params = {});

Rect mouth_roi(Point2 nose, int resolution, const CornerParams& params = {});
Rect brow_roi(Point2 eye, int resolution, const CornerParams& params = {});

/// Anthropometric coordinates (rounded half-up) for each requested point.
std::vector<std::pair<LandmarkId, Point2>> anthropometric_fallback(int resolution,
                                                                   std::span<const LandmarkId> missing);
Point2 anthropometric_point(LandmarkId id, int resolution);
/// Unrounded position as a fraction of the face box (x of width, y of height).
Point2 anthropometric_fraction(LandmarkId id);

/// Mean point-to-point distance over `ids`, divided by the true interpupil
/// distance. Throws DataError if the true eyes coincide.
double landmark_error(const LandmarkSet& pred, const LandmarkSet& truth,
                     std::span<const LandmarkId> ids = kAllLandmarks);

/// `<name> <x> <y>` per line. Reading requires all seven names.
LandmarkSet read_landmarks(const std::filesystem::path& path);
LandmarkSet parse_landmarks(const std::string& text);
std::string format_landmarks(const LandmarkSet& set);
void write_landmarks(const std::filesystem::path& path, const LandmarkSet& set);

/// Copy of `img` with a 3x3 cross (value 255) at every point.
GrayImage draw_crosses(const GrayImage& img, std::span<const Point2> points);

}  // namespace fer
