// Command-line front end: training, prediction, evaluation protocols and
// diagnostics. Exit codes: 0 ok, 1 usage, 2 data error, 3 numeric failure.

#include <charconv>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>

#include "CLI11.hpp"
#include "fer/evaluation.hpp"
#include "fer/image_io.hpp"
#include "fer/patches.hpp"
#include "fer/pipeline.hpp"
#include "fer/reference.hpp"
#include "fer/synth.hpp"
#include "json.hpp"

namespace {

using namespace fer;

struct CommonOptions {
  int resolution = 96;
  std::string bins = "16";
  int top_k = 4;
  std::uint64_t seed = 0;
  bool grid_search = false;
  std::string cascades = default_cascade_dir().string();
  bool no_detect = false;
};

void add_common(CLI::App* cmd, CommonOptions& o, bool training) {
  cmd->add_option("--resolution", o.resolution, "Aligned face size R")->capture_default_str();
  cmd->add_option("--bins", o.bins, "LBP histogram: 16, 32, 256, u2 (59) or riu2 (10)")->capture_default_str();
  cmd->add_option("--cascades", o.cascades, "Directory with face/eye/nose cascades")->capture_default_str();
  cmd->add_flag("--no-detect", o.no_detect, "Use anthropometric landmarks only");
  if (training) {
    cmd->add_option("--top-k", o.top_k, "Salient patches per expression pair")->capture_default_str();
    cmd->add_option("--seed", o.seed, "Seed for folds and shuffles")->capture_default_str();
    cmd->add_flag("--grid-search", o.grid_search, "Select C and gamma by inner cross-validation");
  }
}

PipelineConfig make_config(const CommonOptions& o) {
  PipelineConfig c;
  c.resolution = o.resolution;
  const auto v = parse_variant(o.bins);
  if (!v) throw DataError("unknown --bins value '" + o.bins + "'");
  c.variant = *v;
  c.top_k = o.top_k;
  c.seed = o.seed;
  c.grid_search = o.grid_search;
  c.cascade_dir = o.cascades;
  c.detect_landmarks = !o.no_detect;
  validate_config(c);
  return c;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << text;
}

void print_failures(const std::vector<Failure>& failures) {
  for (const Failure& f : failures) std::cerr << "skipped " << f.path << ": " << f.reason << '\n';
}

std::string votes_text(const std::array<int, kExpressionCount>& v) {
  std::string s;
  for (int c = 0; c < kExpressionCount; ++c)
    s += (c ? " " : "") + std::string(expression_name(c)) + "=" + std::to_string(v[static_cast<std::size_t>(c)]);
  return s;
}

void print_reference_f(const EvaluationReport& r) {
  std::printf("reference macro_f %.2f  measured %.2f\n", reference::kMacroF, 100.0 * r.macro_f);
  std::printf("reference macro_recall %.2f  measured %.2f\n", reference::kMacroRecall, 100.0 * r.macro_recall);
  std::printf("reference macro_precision %.2f  measured %.2f\n", reference::kMacroPrecision,
              100.0 * r.macro_precision);
}

void print_reference_patches(const SalientSelection& sel) {
  int total = 0;
  for (const auto& ref : reference::kSalientPatches) {
    const int a = static_cast<int>(ref.a), b = static_cast<int>(ref.b);
    const int p = pair_index(std::min(a, b), std::max(a, b));
    const std::vector<int>& got = sel.patches[static_cast<std::size_t>(p)];
    const std::size_t top = std::min<std::size_t>(4, got.size());
    const std::set<int> mine(got.begin(), got.begin() + static_cast<std::ptrdiff_t>(top));
    int overlap = 0;
    for (int id : ref.patches) overlap += static_cast<int>(mine.count(id));
    total += overlap;
    std::printf("reference %s-%s overlap %d/4\n", std::string(expression_name(ref.a)).c_str(),
                std::string(expression_name(ref.b)).c_str(), overlap);
  }
  std::printf("reference total overlap %d/60\n", total);
}

constexpr std::array<int, kPatchCount> kAllPatches = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17, 18, 19};

// One CSV row per face over all 19 patches; header names (patch, block, bin).
class FeatureDump {
 public:
  explicit FeatureDump(const std::string& path) : out_(path, std::ios::binary) {
    if (!out_) throw DataError("cannot write " + path);
  }
  void add(const std::string& image, std::string_view label, const FaceDescriptor& d) {
    const FeatureVector v = assemble_features(d, kAllPatches);
    if (!header_) {
      out_ << "path,label," << feature_csv_header(v.layout) << '\n';
      header_ = true;
    }
    out_ << image << ',' << label;
    char buf[32];
    for (double x : v.values) {
      const auto r = std::to_chars(buf, buf + sizeof buf, x);
      out_ << ',' << std::string_view(buf, static_cast<std::size_t>(r.ptr - buf));
    }
    out_ << '\n';
  }

 private:
  std::ofstream out_;
  bool header_ = false;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Salient-patch facial expression recognition"};
  app.require_subcommand(1);
  CommonOptions common;

  std::string data, out, model_path, image, truth, overlay, cdf_out, dump;
  std::vector<std::string> datas;
  bool json = false, compare = false;
  int folds = 10, repeats = 10, per_class = 10;

  auto* train = app.add_subcommand("train", "Train a model from a manifest");
  add_common(train, common, true);
  train->add_option("--data", data, "Manifest CSV")->required();
  train->add_option("--out", out, "Model file")->required();

  auto* predict = app.add_subcommand("predict", "Classify one image");
  predict->add_option("--model", model_path, "Model file")->required();
  predict->add_option("--image", image, "Image (PGM or PNG)")->required();
  predict->add_option("--cascades", common.cascades, "Directory with face/eye/nose cascades")->capture_default_str();
  predict->add_flag("--json", json, "Print JSON");

  auto* evaluate = app.add_subcommand("evaluate", "Score a model on a labelled manifest");
  evaluate->add_option("--model", model_path, "Model file")->required();
  evaluate->add_option("--data", data, "Manifest CSV")->required();
  evaluate->add_option("--cascades", common.cascades, "Directory with face/eye/nose cascades")->capture_default_str();
  evaluate->add_flag("--json", json, "Print JSON");
  evaluate->add_flag("--compare", compare, "Print the reference cross-dataset accuracy alongside");

  auto* crossval = app.add_subcommand("crossval", "Stratified k-fold cross-validation");
  add_common(crossval, common, true);
  crossval->add_option("--data", data, "Manifest CSV")->required();
  crossval->add_option("--folds", folds, "Number of folds")->capture_default_str();
  crossval->add_flag("--json", json, "Print JSON");
  crossval->add_flag("--compare", compare, "Print reference macro scores alongside");

  auto* fused = app.add_subcommand("fused", "Repeated 90/10 protocol over several sources");
  add_common(fused, common, true);
  fused->add_option("--data", datas, "Manifest CSVs, one per source")->required();
  fused->add_option("--repeats", repeats, "Random 90/10 splits")->capture_default_str();
  fused->add_flag("--json", json, "Print JSON");

  auto* landmarks = app.add_subcommand("landmarks", "Detect landmarks on one image or score a manifest");
  add_common(landmarks, common, false);
  landmarks->add_option("--image", image, "Single image");
  landmarks->add_option("--data", data, "Manifest with ground-truth landmark files");
  landmarks->add_option("--truth", truth, "Ground-truth points (source coordinates)");
  landmarks->add_option("--overlay", overlay, "Write the aligned face with crosses (PGM)");
  landmarks->add_option("--cdf", cdf_out, "Write the error CDF as CSV");

  auto* saliency = app.add_subcommand("saliency", "Saliency table and top-k selection");
  add_common(saliency, common, true);
  saliency->add_option("--data", data, "Manifest CSV")->required();
  saliency->add_option("--out", out, "Table CSV")->required();
  saliency->add_option("--folds", folds, "Folds used to score each patch")->capture_default_str();
  saliency->add_flag("--compare", compare, "Report overlap with the reference top-four sets");
  saliency->add_option("--dump-features", dump, "Write every face's 19-patch feature vector (CSV)");

  auto* layout = app.add_subcommand("layout", "Dump the 19-patch layout of one image");
  add_common(layout, common, false);
  layout->add_option("--image", image, "Image (PGM or PNG)")->required();
  layout->add_option("--overlay", overlay, "Write the aligned face with patch outlines (PGM)");
  layout->add_option("--dump-features", dump, "Write the 19-patch feature vector (CSV)");

  auto* synth = app.add_subcommand("synth", "Write the synthetic face fixture set");
  synth->add_option("--out", out, "Output directory")->required();
  synth->add_option("--per-class", per_class, "Faces per expression")->capture_default_str();
  synth->add_option("--seed", common.seed, "Seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (train->parsed()) {
      const PipelineConfig cfg = make_config(common);
      const Manifest m = load_manifest(data);
      require_all_classes(m);
      const PreparedData prep = prepare(m, cfg);
      print_failures(prep.failures);
      save_model(train_descriptors(prep.descriptors(), cfg), out);
      std::printf("trained on %zu images (%zu skipped), model written to %s\n", prep.samples.size(),
                  prep.failures.size(), out.c_str());
    } else if (predict->parsed()) {
      const ExpressionModel model = load_model(model_path);
      PipelineConfig cfg = model.config;
      cfg.cascade_dir = common.cascades;
      const Preprocessor pre(cfg);
      const Prediction p = fer::predict(model, pre, read_image(image));
      if (json) {
        nlohmann::ordered_json j;
        j["image"] = image;
        j["face_found"] = p.face_found;
        j["label"] = p.face_found ? std::string(expression_name(p.label)) : std::string();
        j["votes"] = p.votes;
        std::printf("%s\n", j.dump(2).c_str());
      } else if (!p.face_found) {
        std::printf("no face\n");
      } else {
        std::printf("%s\nvotes %s\n", std::string(expression_name(p.label)).c_str(), votes_text(p.votes).c_str());
      }
    } else if (evaluate->parsed()) {
      const ExpressionModel model = load_model(model_path);
      PipelineConfig runtime;
      runtime.cascade_dir = common.cascades;
      const EvaluationReport r = fer::evaluate(model, load_manifest(data), runtime);
      std::printf("%s\n", (json ? report_json(r) : format_report(r)).c_str());
      if (compare) std::printf("reference accuracy %.2f  measured %.2f\n", reference::kCrossDatasetAccuracy, 100.0 * r.accuracy);
    } else if (crossval->parsed()) {
      const CrossValidation cv = cross_validate(load_manifest(data), make_config(common), folds, common.seed);
      print_failures(cv.failures);
      std::printf("%s\n", (json ? report_json(cv.report) : format_report(cv.report)).c_str());
      if (compare) print_reference_f(cv.report);
    } else if (fused->parsed()) {
      std::vector<Manifest> ms;
      for (const std::string& d : datas) ms.push_back(load_manifest(d));
      const auto reports = fused_protocol(ms, make_config(common), repeats, common.seed);
      nlohmann::ordered_json j = nlohmann::ordered_json::array();
      for (const SourceReport& sr : reports) {
        if (json) {
          j.push_back({{"source", sr.source}, {"repeats", sr.repeats}, {"report", nlohmann::json::parse(report_json(sr.report))}});
        } else {
          std::printf("== %s (%d repeats)\n%s\n", sr.source.c_str(), sr.repeats, format_report(sr.report).c_str());
        }
      }
      if (json) std::printf("%s\n", j.dump(2).c_str());
    } else if (landmarks->parsed()) {
      const PipelineConfig cfg = make_config(common);
      if (!data.empty()) {
        const LandmarkEvaluation ev = evaluate_landmarks(load_manifest(data), cfg);
        print_failures(ev.skipped);
        for (const LandmarkEvalEntry& e : ev.entries) std::printf("%s %.6f\n", e.path.c_str(), e.error);
        const std::string csv = format_cdf_csv(ev.cdf);
        if (!cdf_out.empty()) write_text(cdf_out, csv);
        else std::printf("%s", csv.c_str());
      } else if (!image.empty()) {
        const Preprocessor pre(cfg);
        const PreprocessResult res = pre.run(read_image(image));
        if (!res.face) throw DataError(image + ": " + res.failure);
        for (LandmarkId id : kAllLandmarks) {
          const Landmark& l = res.face->landmarks[id];
          std::printf("%s %.3f %.3f %s\n", std::string(landmark_name(id)).c_str(), l.pos.x, l.pos.y,
                      l.source == Provenance::detected ? "detected" : "fallback");
        }
        if (!truth.empty()) {
          const LandmarkSet t_src = read_landmarks(truth);
          LandmarkSet t;
          for (LandmarkId id : kAllLandmarks) t[id] = {res.transform->apply(t_src.pos(id)), Provenance::detected};
          std::printf("error %.6f\n", landmark_error(res.face->landmarks, t));
        }
        if (!overlay.empty()) {
          std::vector<Point2> pts;
          for (LandmarkId id : kAllLandmarks) pts.push_back(res.face->landmarks.pos(id));
          write_pgm(overlay, draw_crosses(res.face->image, pts));
        }
      } else {
        std::cerr << "landmarks: give --image or --data\n";
        return 1;
      }
    } else if (saliency->parsed()) {
      PipelineConfig cfg = make_config(common);
      cfg.saliency_folds = folds;
      const Manifest m = load_manifest(data);
      require_all_classes(m);
      const PreparedData prep = prepare(m, cfg);
      print_failures(prep.failures);
      SaliencyOptions so;
      so.folds = cfg.saliency_folds;
      so.seed = cfg.seed;
      so.pca = cfg.pca;
      const std::vector<LabeledDescriptor> d = prep.descriptors();
      if (!dump.empty()) {
        FeatureDump fd(dump);
        for (const PreparedSample& ps : prep.samples)
          fd.add(m.records[ps.record].image.string(), expression_name(ps.sample.label), ps.sample.descriptor);
      }
      const SaliencyTable table = build_table(d, so);
      write_text(out, format_table_csv(table));
      const SalientSelection sel = select_salient(table, cfg.top_k);
      std::printf("%s", format_selection(sel).c_str());
      if (compare) print_reference_patches(sel);
    } else if (layout->parsed()) {
      const PipelineConfig cfg = make_config(common);
      const Preprocessor pre(cfg);
      const PreprocessResult res = pre.run(read_image(image));
      if (!res.face) throw DataError(image + ": " + res.failure);
      const PatchLayout lay = layout_patches(res.face->landmarks, cfg.resolution);
      std::printf("%s", format_layout(lay).c_str());
      if (!overlay.empty()) write_pgm(overlay, draw_layout(res.face->image, lay));
      if (!dump.empty()) FeatureDump(dump).add(image, "", describe_face(res.face->image, lay, cfg.variant));
    } else if (synth->parsed()) {
      const auto path = synth::write_dataset(out, per_class, common.seed);
      std::printf("%s\n", path.string().c_str());
    }
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return 3;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
