#include <fstream>
#include <numeric>

#include "doctest.h"
#include "fer/error.hpp"
#include "fer/evaluation.hpp"
#include "fer/image_io.hpp"
#include "fer/pipeline.hpp"
#include "fer/reference.hpp"
#include "fer/rng.hpp"
#include "fer/synth.hpp"
#include "support.hpp"

using namespace fer;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void touch(const std::filesystem::path& p) { std::ofstream(p) << "x"; }

// Class c lifts bin (c + k) % 16 in every block of patches 1..19 by `gain`.
std::vector<LabeledDescriptor> descriptors(int per_class, std::uint64_t seed, double gain) {
  SplitMix64 rng(seed);
  std::vector<LabeledDescriptor> out;
  for (int c = 0; c < kExpressionCount; ++c)
    for (int i = 0; i < per_class; ++i) {
      LabeledDescriptor d;
      d.label = c;
      for (std::size_t k = 0; k < d.descriptor.patches.size(); ++k) {
        auto& p = d.descriptor.patches[k];
        p.assign(64, 0.0);
        for (double& v : p) v = 0.05 * rng.uniform();
        for (int blk = 0; blk < 4; ++blk) p[static_cast<std::size_t>(blk * 16 + (c + static_cast<int>(k)) % 16)] += gain;
      }
      out.push_back(std::move(d));
    }
  return out;
}

// Shared synthetic image set, generated once.
const std::filesystem::path& synth_manifest() {
  static testing::TempDir dir("pipeline_synth");
  static const std::filesystem::path manifest = synth::write_dataset(dir.path(), 5, 21);
  return manifest;
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("manifest parsing") {
  testing::TempDir dir("manifest");
  touch(dir / "a.pgm");
  touch(dir / "b.pgm");
  const Manifest m = parse_manifest("path,label,landmarks,source\n# comment\na.pgm,anger\n\nb.pgm,surprise,,lab\n",
                                    dir.path());
  REQUIRE(m.records.size() == 2);
  CHECK(m.records[0].label == 0);
  CHECK(m.records[0].line == 3);
  CHECK(m.records[1].label == static_cast<int>(Expression::surprise));
  CHECK(m.records[1].source == "lab");
  CHECK(m.records[0].image == dir / "a.pgm");
  CHECK(class_counts(m)[0] == 1);

  auto line_of = [&](const std::string& text) {
    try {
      parse_manifest(text, dir.path());
    } catch (const ParseError& e) {
      return e.line();
    }
    return -1;
  };
  CHECK(line_of("a.pgm,anger\nb.pgm,contempt\n") == 2);
  CHECK(line_of("a.pgm,anger\n\nb.pgm,fear\na.pgm,fear\n") == 4);
  CHECK(line_of("a.pgm,anger\nmissing.pgm,fear\n") == 2);
  CHECK(parse_manifest("missing.pgm,fear\n", dir.path(), false).records.size() == 1);
  const Manifest round = parse_manifest(format_manifest(m), dir.path());
  CHECK(round.records.size() == 2);
  CHECK(round.records[1].source == "lab");
}

TEST_CASE("metrics") {
  ConfusionCounts id{};
  for (int i = 0; i < kExpressionCount; ++i) id[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)] = 3 + i;
  const EvaluationReport r = metrics(id);
  CHECK(r.macro_f == doctest::Approx(1.0));
  CHECK(r.accuracy == 1.0);
  CHECK(r.total == 33);

  ConfusionCounts empty_col{};
  empty_col[0][0] = 2;
  empty_col[1][0] = 1;
  const EvaluationReport e = metrics(empty_col);
  CHECK(e.precision[1] == 0.0);
  CHECK(e.recall[1] == 0.0);
  CHECK(e.precision[0] == doctest::Approx(2.0 / 3.0));
  CHECK_THROWS_AS(metrics(ConfusionCounts{}), DataError);
  ConfusionCounts neg{};
  neg[0][0] = -1;
  CHECK_THROWS_AS(metrics(neg), DataError);

  for (const auto& row : r.confusion) {
    double s = 0;
    for (double v : row) s += v;
    CHECK(s == doctest::Approx(100.0));
  }
}

TEST_CASE("reference confusion matrix reproduces the reference macro scores") {
  ConfusionCounts c{};
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 6; ++j) {
      const auto ti = static_cast<std::size_t>(reference::kConfusionOrder[i]);
      const auto tj = static_cast<std::size_t>(reference::kConfusionOrder[j]);
      c[ti][tj] = round_half_up(reference::kConfusionPercent[i][j] * reference::kClassCounts[i] / 100.0);
    }
  const EvaluationReport r = metrics(c);
  CHECK(std::abs(100 * r.macro_recall - reference::kMacroRecall) <= 0.5);
  CHECK(std::abs(100 * r.macro_f - reference::kMacroF) <= 0.5);
  CHECK(std::abs(100 * r.macro_precision - reference::kMacroPrecision) <= 0.5);
}

TEST_CASE("landmark CDF") {
  const auto grid = cdf_grid();
  REQUIRE(grid.size() == 31);
  const std::vector<double> zeros(5, 0.0);
  for (const auto& [t, f] : landmark_cdf(zeros, grid)) CHECK(f == 1.0);
  const std::vector<double> tenth(4, 0.1);
  for (const auto& [t, f] : landmark_cdf(tenth, grid)) CHECK(f == (t >= 0.1 ? 1.0 : 0.0));
  SplitMix64 rng(3);
  std::vector<double> mixed;
  for (int i = 0; i < 50; ++i) mixed.push_back(0.3 * rng.uniform());
  const auto cdf = landmark_cdf(mixed, grid);
  for (std::size_t i = 1; i < cdf.size(); ++i) CHECK(cdf[i].second >= cdf[i - 1].second);
  CHECK(format_cdf_csv(cdf).rfind("threshold,", 0) == 0);
}

TEST_CASE("config validation") {
  PipelineConfig c;
  validate_config(c);
  c.top_k = 20;
  CHECK_THROWS_AS(validate_config(c), DataError);
  c.top_k = 4;
  c.resolution = 16;
  CHECK_THROWS_AS(validate_config(c), DataError);
}

TEST_CASE("descriptor-level training, round trip and determinism") {
  const auto data = descriptors(8, 1, 0.3);
  PipelineConfig cfg;
  cfg.seed = 5;
  const ExpressionModel m = train_descriptors(data, cfg);
  const std::string text = format_model(m);
  CHECK(text.rfind("FERSPM 1\n", 0) == 0);
  CHECK(format_model(train_descriptors(data, cfg)) == text);
  const ExpressionModel back = parse_model(text);
  CHECK(format_model(back) == text);
  SplitMix64 rng(2);
  for (const auto& d : descriptors(3, 99, 0.1)) {
    const Prediction a = predict(m, d.descriptor), b = predict(back, d.descriptor);
    CHECK(a.label == b.label);
    CHECK(a.votes == b.votes);
    CHECK(a.strength == b.strength);
  }
  for (const auto& d : data) CHECK(predict(m, d.descriptor).label == d.label);

  PipelineConfig all = cfg;
  all.top_k = 19;
  const ExpressionModel big = train_descriptors(data, all);
  CHECK(big.ensemble.models[0].pca.input_dim() == 19 * 4 * 16);
  CHECK(m.ensemble.models[0].pca.input_dim() == 4 * 4 * 16);

  CHECK_THROWS_AS(parse_model("FERSPM 2\n"), ParseError);
  std::string broken = text;
  broken.replace(broken.find("[end]"), 5, "[fin]");
  CHECK_THROWS(parse_model(broken));
}

TEST_CASE("cross-validation partitions and chance level") {
  PipelineConfig cfg;
  cfg.saliency_folds = 5;
  const auto data = descriptors(10, 2, 0.3);
  const CrossValidation cv = cross_validate_descriptors(data, cfg, 5, 7);
  REQUIRE(cv.fold_of.size() == data.size());
  std::array<int, 5> per_fold{};
  for (int f : cv.fold_of) {
    REQUIRE(f >= 0);
    REQUIRE(f < 5);
    ++per_fold[static_cast<std::size_t>(f)];
  }
  CHECK(std::accumulate(per_fold.begin(), per_fold.end(), 0) == 60);
  CHECK(cv.report.total == 60);
  CHECK(cv.report.macro_f >= 0.95);

  auto shuffled = descriptors(15, 3, 0.3);
  std::vector<int> labels;
  for (const auto& d : shuffled) labels.push_back(d.label);
  SplitMix64 rng(4);
  shuffle(std::span<int>(labels), rng);
  for (std::size_t i = 0; i < shuffled.size(); ++i) shuffled[i].label = labels[i];
  const double f = cross_validate_descriptors(shuffled, cfg, 5, 7).report.macro_f;
  CHECK(std::abs(f - 1.0 / 6) <= 0.1);

  CHECK_THROWS_AS(cross_validate_descriptors(descriptors(3, 2, 0.3), cfg, 5, 7), DataError);
}

TEST_CASE("synthetic images: detection, training and prediction") {
  const Manifest manifest = load_manifest(synth_manifest());
  REQUIRE(manifest.records.size() == 30);
  PipelineConfig cfg;
  const Preprocessor pre(cfg);

  const synth::Face face = synth::render(2, 77);
  const PreprocessResult r = pre.run(face.image);
  REQUIRE(r.face.has_value());
  CHECK(r.face->landmarks.all_detected());
  CHECK(r.face->image.width() == 96);

  PipelineConfig off = cfg;
  off.detect_landmarks = false;
  const PreprocessResult fb = Preprocessor(off).run(face.image);
  REQUIRE(fb.face.has_value());
  for (LandmarkId id : kAllLandmarks) CHECK(fb.face->landmarks[id].source == Provenance::fallback);

  // Override on an already aligned R x R face is reproduced exactly.
  const GrayImage aligned = testing::random_image(96, 96, 5);
  LandmarkSet given;
  for (LandmarkId id : kAllLandmarks) given[id] = {anthropometric_point(id, 96), Provenance::detected};
  given[LandmarkId::lip_left].pos = {33.25, 74.5};
  const PreprocessResult ov = Preprocessor(off).run(aligned, given);
  REQUIRE(ov.face.has_value());
  CHECK(ov.face->landmarks == given);

  const ExpressionModel model = train(manifest, cfg);
  testing::TempDir dir("pipeline_model");
  save_model(model, dir / "m.txt");
  save_model(train(manifest, cfg), dir / "m2.txt");
  CHECK(slurp(dir / "m.txt") == slurp(dir / "m2.txt"));
  const ExpressionModel loaded = load_model(dir / "m.txt");

  int correct = 0;
  for (const ManifestRecord& rec : manifest.records) {
    const GrayImage img = read_image(rec.image);
    const Prediction a = predict(model, pre, img);
    const Prediction b = predict(loaded, pre, img);
    REQUIRE(a.face_found);
    CHECK(a.votes == b.votes);
    CHECK(a.label == b.label);
    correct += a.label == rec.label;
  }
  CHECK(correct == 30);

  const Prediction none = predict(model, pre, GrayImage(160, 160, 60));
  CHECK(!none.face_found);
  const Prediction again = predict(model, pre, read_image(manifest.records[0].image));
  CHECK(again.votes == predict(model, pre, read_image(manifest.records[0].image)).votes);

  const EvaluationReport ev = evaluate(model, manifest, cfg);
  CHECK(ev.total == 30);
  CHECK(ev.skipped == 0);
}

TEST_CASE("absent class is rejected before training") {
  testing::TempDir dir("missing_class");
  touch(dir / "a.pgm");
  const Manifest m = parse_manifest("a.pgm,anger\n", dir.path());
  CHECK_THROWS_AS(require_all_classes(m), DataError);
  CHECK_THROWS_AS(train(m, PipelineConfig{}), DataError);
}

TEST_CASE("fused protocol reports per source") {
  const Manifest base = load_manifest(synth_manifest());
  Manifest a = base, b = base;
  for (auto& r : a.records) r.source = "alpha";
  for (auto& r : b.records) r.source = "beta";
  const std::vector<Manifest> ms = {a, b};
  PipelineConfig cfg;
  const auto reports = fused_protocol(ms, cfg, 2, 3);
  REQUIRE(reports.size() == 2);
  CHECK(reports[0].source == "alpha");
  CHECK(reports[1].source == "beta");
  for (const auto& r : reports) CHECK(r.repeats == 2);
  CHECK(std::abs(reports[0].report.accuracy - reports[1].report.accuracy) <= 0.2);
  const auto again = fused_protocol(ms, cfg, 2, 3);
  CHECK(again[0].report.counts == reports[0].report.counts);

  const std::vector<Manifest> untagged = {base, base};
  CHECK(record_sources(untagged)[0] == "manifest1");
  CHECK(record_sources(untagged).back() == "manifest2");
}

TEST_CASE("landmark evaluation on the synthetic set") {
  const LandmarkEvaluation le = evaluate_landmarks(load_manifest(synth_manifest()), PipelineConfig{});
  CHECK(le.entries.size() == 30);
  CHECK(le.skipped.empty());
  for (const auto& e : le.entries) CHECK(e.error < 0.1);
  CHECK(le.cdf.back().second == 1.0);
}

}  // TEST_SUITE
