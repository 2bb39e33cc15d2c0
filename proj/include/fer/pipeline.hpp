#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fer/detection.hpp"
#include "fer/landmarks.hpp"
#include "fer/lbp.hpp"
#include "fer/manifest.hpp"
#include "fer/oao.hpp"
#include "fer/saliency.hpp"

namespace fer {

/// Directory holding the bundled cascades (face.txt, eye_left.txt,
/// eye_right.txt, nose.txt).
std::filesystem::path default_cascade_dir();

struct PipelineConfig {
  int resolution = 96;
  LbpVariant variant = LbpVariant::bins16;
  int top_k = 4;
  std::uint64_t seed = 0;
  bool grid_search = false;
  int saliency_folds = 10;
  /// When false every landmark comes from the anthropometric table and the
  /// whole image is taken as the face.
  bool detect_landmarks = true;
  std::filesystem::path cascade_dir = default_cascade_dir();
  DetectParams detect{};
  CornerParams corners{};
  PcaOptions pca{};
  SvmParams svm{};
};

/// Throws DataError for out-of-range settings.
void validate_config(const PipelineConfig& config);

struct Cascades {
  HaarCascade face;
  HaarCascade left_eye;
  HaarCascade right_eye;
  HaarCascade nose;
};

Cascades load_cascades(const std::filesystem::path& dir);

struct PreprocessResult {
  std::optional<AlignedFace> face;  // empty when no face was found
  std::optional<BoundingBox> face_box;
  std::optional<AlignmentTransform> transform;
  std::string failure;
};

/// Blur, face detection, eye/nose detection with anthropometric fallback,
/// alignment to R x R with equalization, then lip and eyebrow corners.
class Preprocessor {
 public:
  explicit Preprocessor(const PipelineConfig& config);

  /// `override_points` are source-image coordinates: they drive the
  /// alignment and replace every detected landmark. Without a detected face
  /// the whole image is used as the face box in that mode.
  PreprocessResult run(const GrayImage& image, const std::optional<LandmarkSet>& override_points = {}) const;

  const PipelineConfig& config() const { return config_; }

 private:
  PipelineConfig config_;
  std::optional<Cascades> cascades_;
};

struct PreparedSample {
  std::size_t record = 0;  // index into the manifest
  LabeledDescriptor sample;
  LandmarkSet landmarks;
};

struct Failure {
  std::size_t record = 0;
  std::string path;
  std::string reason;
};

struct PreparedData {
  std::vector<PreparedSample> samples;  // manifest order
  std::vector<Failure> failures;

  std::vector<LabeledDescriptor> descriptors() const;
};

/// Preprocesses and describes every record (parallel over images, results
/// in manifest order). Landmark files in the manifest override detection.
PreparedData prepare(const Manifest& manifest, const PipelineConfig& config);

struct ExpressionModel {
  static constexpr int kVersion = 1;
  PipelineConfig config;
  SalientSelection selection;
  OaoEnsemble ensemble;
};

/// Throws DataError when a class is absent, before any image is read.
void require_all_classes(const Manifest& manifest);

ExpressionModel train(const Manifest& manifest, const PipelineConfig& config);
/// Saliency table, top-k selection and OAO training on ready descriptors.
ExpressionModel train_descriptors(std::span<const LabeledDescriptor> data, const PipelineConfig& config,
                                  SaliencyTable* table_out = nullptr);

struct Prediction {
  bool face_found = false;
  int label = -1;
  std::array<int, kExpressionCount> votes{};
  std::array<double, kExpressionCount> strength{};
  LandmarkSet landmarks;
};

Prediction predict(const ExpressionModel& model, const FaceDescriptor& face);
Prediction predict(const ExpressionModel& model, const Preprocessor& pre, const GrayImage& image);

/// Structured text: `FERSPM 1`, named sections, base64 little-endian f64
/// arrays with declared shapes. Bit-exact round trip.
std::string format_model(const ExpressionModel& model);
ExpressionModel parse_model(const std::string& text);
void save_model(const ExpressionModel& model, const std::filesystem::path& path);
ExpressionModel load_model(const std::filesystem::path& path);

}  // namespace fer
