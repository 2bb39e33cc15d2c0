#include "fer/pipeline.hpp"

#include <exception>

#include "fer/error.hpp"
#include "fer/image_io.hpp"

namespace fer {

std::filesystem::path default_cascade_dir() { return std::filesystem::path(FER_DATA_DIR) / "cascades"; }

void validate_config(const PipelineConfig& c) {
  if (c.resolution < 32 || c.resolution > 1024) throw DataError("resolution must lie in [32, 1024]");
  if (c.top_k < 1 || c.top_k > kPatchCount) throw DataError("top-k must lie in [1, 19]");
  if (c.saliency_folds < 2) throw DataError("saliency folds must be at least 2");
  if (c.svm.c <= 0) throw DataError("SVM C must be positive");
}

Cascades load_cascades(const std::filesystem::path& dir) {
  return {load_cascade(dir / "face.txt"), load_cascade(dir / "eye_left.txt"), load_cascade(dir / "eye_right.txt"),
          load_cascade(dir / "nose.txt")};
}

Preprocessor::Preprocessor(const PipelineConfig& config) : config_(config) {
  validate_config(config_);
  if (config_.detect_landmarks) cascades_ = load_cascades(config_.cascade_dir);
}

namespace {

Point2 fallback_in_box(LandmarkId id, const BoundingBox& box) {
  const Point2 f = anthropometric_fraction(id);
  return {box.x + f.x * box.w, box.y + f.y * box.h};
}

}  // namespace

PreprocessResult Preprocessor::run(const GrayImage& image, const std::optional<LandmarkSet>& override_points) const {
  PreprocessResult res;
  const int r = config_.resolution;
  if (image.width() < 3 || image.height() < 3) {
    res.failure = "image too small";
    return res;
  }
  const GrayImage blurred = gaussian_blur_3x3(image);

  if (!config_.detect_landmarks && !override_points) {
    const BoundingBox box = image.bounds();
    const Alignment al = align_face(blurred, box, fallback_in_box(LandmarkId::left_eye, box),
                                    fallback_in_box(LandmarkId::right_eye, box), r);
    AlignedFace face{al.image, {}};
    for (LandmarkId id : kAllLandmarks) face.landmarks[id] = {anthropometric_point(id, r), Provenance::fallback};
    res.face = std::move(face);
    res.face_box = box;
    res.transform = al.transform;
    return res;
  }

  std::optional<BoundingBox> box;
  if (cascades_) box = detect_face(blurred, cascades_->face, config_.detect);
  if (!box) {
    if (!override_points) {
      res.failure = "no face detected";
      return res;
    }
    box = image.bounds();
  }
  res.face_box = box;

  std::optional<Point2> le, re, nose;
  if (override_points) {
    le = override_points->pos(LandmarkId::left_eye);
    re = override_points->pos(LandmarkId::right_eye);
  } else {
    if (auto b = detect_eye(blurred, EyeSide::left, *box, cascades_->left_eye, config_.detect)) le = box_center(*b);
    if (auto b = detect_eye(blurred, EyeSide::right, *box, cascades_->right_eye, config_.detect)) re = box_center(*b);
    if (auto b = detect_nose(blurred, *box, cascades_->nose, config_.detect)) nose = box_center(*b);
  }
  const Point2 le_src = le.value_or(fallback_in_box(LandmarkId::left_eye, *box));
  const Point2 re_src = re.value_or(fallback_in_box(LandmarkId::right_eye, *box));
  Alignment al;
  try {
    al = align_face(blurred, *box, le_src, re_src, r);
  } catch (const DataError& e) {
    res.failure = e.what();
    return res;
  }
  const AlignmentTransform& t = al.transform;
  res.transform = t;

  AlignedFace face{al.image, {}};
  LandmarkSet& lm = face.landmarks;
  if (override_points) {
    for (LandmarkId id : kAllLandmarks) lm[id] = {t.apply(override_points->pos(id)), Provenance::detected};
    res.face = std::move(face);
    return res;
  }

  auto place = [&](LandmarkId id, const std::optional<Point2>& src) {
    lm[id] = src ? Landmark{t.apply(*src), Provenance::detected}
                 : Landmark{anthropometric_point(id, r), Provenance::fallback};
  };
  place(LandmarkId::left_eye, le);
  place(LandmarkId::right_eye, re);
  if (lm.pos(LandmarkId::left_eye).x > lm.pos(LandmarkId::right_eye).x)
    std::swap(lm[LandmarkId::left_eye], lm[LandmarkId::right_eye]);
  place(LandmarkId::nose, nose);

  if (auto lips = detect_lip_corners(al.image, lm.pos(LandmarkId::nose), config_.corners)) {
    lm[LandmarkId::lip_left] = {lips->left, Provenance::detected};
    lm[LandmarkId::lip_right] = {lips->right, Provenance::detected};
  } else {
    lm[LandmarkId::lip_left] = {anthropometric_point(LandmarkId::lip_left, r), Provenance::fallback};
    lm[LandmarkId::lip_right] = {anthropometric_point(LandmarkId::lip_right, r), Provenance::fallback};
  }
  const auto [bl, br] =
      detect_eyebrow_corners(al.image, lm.pos(LandmarkId::left_eye), lm.pos(LandmarkId::right_eye), config_.corners);
  lm[LandmarkId::brow_inner_left] = bl ? Landmark{*bl, Provenance::detected}
                                       : Landmark{anthropometric_point(LandmarkId::brow_inner_left, r), Provenance::fallback};
  lm[LandmarkId::brow_inner_right] =
      br ? Landmark{*br, Provenance::detected}
         : Landmark{anthropometric_point(LandmarkId::brow_inner_right, r), Provenance::fallback};
  res.face = std::move(face);
  return res;
}

std::vector<LabeledDescriptor> PreparedData::descriptors() const {
  std::vector<LabeledDescriptor> out;
  out.reserve(samples.size());
  for (const PreparedSample& s : samples) out.push_back(s.sample);
  return out;
}

PreparedData prepare(const Manifest& manifest, const PipelineConfig& config) {
  const Preprocessor pre(config);
  const std::size_t n = manifest.records.size();
  std::vector<std::optional<PreparedSample>> done(n);
  std::vector<std::string> reasons(n);
  std::vector<std::exception_ptr> fatal(n);
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < n; ++i) {
    const ManifestRecord& rec = manifest.records[i];
    try {
      const GrayImage img = read_image(rec.image);
      std::optional<LandmarkSet> truth;
      if (rec.landmarks) truth = read_landmarks(*rec.landmarks);
      const PreprocessResult res = pre.run(img, truth);
      if (!res.face) {
        reasons[i] = res.failure;
        continue;
      }
      const PatchLayout layout = layout_patches(res.face->landmarks, config.resolution);
      PreparedSample s;
      s.record = i;
      s.sample.label = rec.label;
      s.sample.descriptor = describe_face(res.face->image, layout, config.variant);
      s.landmarks = res.face->landmarks;
      done[i] = std::move(s);
    } catch (const DataError& e) {
      reasons[i] = e.what();
    } catch (...) {
      fatal[i] = std::current_exception();
    }
  }
  for (const auto& e : fatal)
    if (e) std::rethrow_exception(e);
  PreparedData out;
  for (std::size_t i = 0; i < n; ++i) {
    if (done[i]) out.samples.push_back(std::move(*done[i]));
    else out.failures.push_back({i, manifest.records[i].image.string(), reasons[i]});
  }
  return out;
}

void require_all_classes(const Manifest& manifest) {
  const std::vector<int> counts = class_counts(manifest);
  for (int c = 0; c < kExpressionCount; ++c)
    if (counts[static_cast<std::size_t>(c)] == 0)
      throw DataError("manifest has no samples of class '" + std::string(expression_name(c)) + "'");
}

ExpressionModel train_descriptors(std::span<const LabeledDescriptor> data, const PipelineConfig& config,
                                  SaliencyTable* table_out) {
  validate_config(config);
  SaliencyOptions so;
  so.folds = config.saliency_folds;
  so.seed = config.seed;
  so.pca = config.pca;
  const SaliencyTable table = build_table(data, so);
  if (table_out) *table_out = table;

  ExpressionModel model;
  model.config = config;
  model.selection = select_salient(table, config.top_k);
  OaoConfig oc;
  oc.pca = config.pca;
  oc.svm = config.svm;
  oc.grid_search = config.grid_search;
  oc.seed = config.seed;
  model.ensemble = oao_train(data, model.selection, oc);
  return model;
}

ExpressionModel train(const Manifest& manifest, const PipelineConfig& config) {
  validate_config(config);
  require_all_classes(manifest);
  const PreparedData prepared = prepare(manifest, config);
  return train_descriptors(prepared.descriptors(), config);
}

Prediction predict(const ExpressionModel& model, const FaceDescriptor& face) {
  const VoteResult v = oao_predict(model.ensemble, face);
  Prediction p;
  p.face_found = true;
  p.label = v.label;
  p.votes = v.votes;
  p.strength = v.strength;
  return p;
}

Prediction predict(const ExpressionModel& model, const Preprocessor& pre, const GrayImage& image) {
  const PreprocessResult res = pre.run(image);
  if (!res.face) return {};
  const PatchLayout layout = layout_patches(res.face->landmarks, model.config.resolution);
  Prediction p = predict(model, describe_face(res.face->image, layout, model.config.variant));
  p.landmarks = res.face->landmarks;
  return p;
}

}  // namespace fer
