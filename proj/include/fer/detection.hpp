#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fer/image.hpp"

namespace fer {

/// Weighted rectangle in canonical-window coordinates.
struct HaarRect {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;
  double weight = 0.0;
};

/// Stump on one Haar feature: value < threshold -> left, else right.
struct WeakClassifier {
  double threshold = 0.0;
  double left = 0.0;
  double right = 0.0;
  std::vector<HaarRect> rects;  // 2 or 3
};

struct CascadeStage {
  double threshold = 0.0;
  std::vector<WeakClassifier> weak;
};

/// Viola-Jones style boosted cascade. Immutable once loaded.
///
/// Feature value for a window of size (W,H) at scale s = W / window_w:
///   f = sum_r weight_r * rectsum_r / (A * sigma)
/// where rect coordinates are scaled by s, A = (W*H) / (window_w*window_h)
/// and sigma is the window's intensity standard deviation (floored at 1).
/// A window passes a stage when the sum of its weak-classifier leaf values is
/// >= the stage threshold; it is accepted when it passes every stage.
struct HaarCascade {
  int window_w = 0;
  int window_h = 0;
  std::vector<CascadeStage> stages;
};

/// Throws ParseError (with line number) on malformed text and DataError when
/// an invariant is violated (rectangle outside window, empty stage).
HaarCascade parse_cascade(const std::string& text);
HaarCascade load_cascade(const std::filesystem::path& path);
std::string format_cascade(const HaarCascade& cascade);
void validate_cascade(const HaarCascade& cascade);

struct DetectParams {
  double scale_step = 1.1;
  /// Minimum window side in pixels; 0 selects 1/5 of the ROI's smaller side.
  int min_size = 0;
  /// Candidate windows required to form a detection.
  int min_neighbors = 3;
  /// Rectangle similarity used for grouping (relative to the smaller size).
  double group_eps = 0.2;
};

/// One level of the multi-scale scan: window size and stride.
struct ScaleLevel {
  double scale = 1.0;
  int width = 0;
  int height = 0;
  int stride = 1;
};

/// Evaluates the cascade at one window using integral images.
bool evaluate_window(const HaarCascade& cascade, const IntegralImage& sum,
                     const IntegralImage& sqsum, const Rect& window);

/// Candidate windows (before grouping) that pass every stage.
std::vector<Rect> scan_windows(const GrayImage& img, const HaarCascade& cascade,
                               const Rect& roi, const DetectParams& params = {});

/// Merges similar rectangles; clusters with fewer than min_neighbors members
/// are dropped. Each surviving cluster yields its mean rectangle.
std::vector<Rect> group_rectangles(const std::vector<Rect>& candidates, int min_neighbors, double eps);

/// Multi-scale sliding window over roi. Returned boxes lie inside roi and are
/// sorted by area, largest first.
std::vector<BoundingBox> detect(const GrayImage& img, const HaarCascade& cascade,
                                const Rect& roi, const DetectParams& params = {});

enum class EyeSide { left, right };

/// Coarse search regions, as fractions of the face box.
Rect left_eye_roi(const BoundingBox& face);
Rect right_eye_roi(const BoundingBox& face);
Rect nose_roi(const BoundingBox& face);

/// Rows [top, bottom) x cols [left, right) of `box`, given as fractions of its
/// height/width. Boundaries are floor(fraction * extent).
Rect fractional_subrect(const BoundingBox& box, double left, double top, double right, double bottom);

std::optional<BoundingBox> detect_face(const GrayImage& img, const HaarCascade& cascade,
                                       const DetectParams& params = {});
std::optional<BoundingBox> detect_eye(const GrayImage& img, EyeSide side, const BoundingBox& face,
                                      const HaarCascade& cascade, const DetectParams& params = {});
std::optional<BoundingBox> detect_nose(const GrayImage& img, const BoundingBox& face,
                                       const HaarCascade& cascade, const DetectParams& params = {});

/// Mean of the four box vertices.
inline Point2 box_center(const BoundingBox& b) {
  return {b.x + b.w / 2.0, b.y + b.h / 2.0};
}

namespace serial {
/// Reference scan: every feature evaluated by direct pixel summation.
std::vector<Rect> scan_windows(const GrayImage& img, const HaarCascade& cascade,
                               const Rect& roi, const DetectParams& params = {});
/// Naive feature value at a window (no integral images).
double feature_value(const GrayImage& img, const HaarCascade& cascade, const WeakClassifier& weak,
                     const Rect& window);
}  // namespace serial

/// Integral-image feature value at a window.
double feature_value(const HaarCascade& cascade, const WeakClassifier& weak, const IntegralImage& sum,
                     const IntegralImage& sqsum, const Rect& window);

/// Scale levels visited by the scan, smallest first. Window origins are
/// roi.x + i*stride, roi.y + j*stride.
std::vector<ScaleLevel> scan_plan(const HaarCascade& cascade, const Rect& roi,
                                       const DetectParams& params);

}  // namespace fer
