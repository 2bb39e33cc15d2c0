#include "fer/evaluation.hpp"

#include <algorithm>
#include <map>
#include <sstream>

#include "fer/error.hpp"
#include "fer/image_io.hpp"
#include "fer/rng.hpp"

namespace fer {

EvaluationReport evaluate_descriptors(const ExpressionModel& model, std::span<const LabeledDescriptor> data) {
  ConfusionCounts counts{};
  for (const LabeledDescriptor& d : data)
    ++counts[static_cast<std::size_t>(d.label)][static_cast<std::size_t>(predict(model, d.descriptor).label)];
  return metrics(counts);
}

EvaluationReport evaluate(const ExpressionModel& model, const Manifest& manifest, const PipelineConfig& runtime) {
  PipelineConfig cfg = model.config;
  cfg.cascade_dir = runtime.cascade_dir;
  const PreparedData prep = prepare(manifest, cfg);
  if (prep.samples.empty()) throw DataError("no image in the manifest could be processed");
  const std::vector<LabeledDescriptor> data = prep.descriptors();
  EvaluationReport rep = evaluate_descriptors(model, data);
  rep.skipped = static_cast<std::int64_t>(prep.failures.size());
  return rep;
}

CrossValidation cross_validate_descriptors(std::span<const LabeledDescriptor> data, const PipelineConfig& config,
                                           int folds, std::uint64_t seed) {
  if (folds < 2) throw DataError("cross-validation needs at least 2 folds");
  std::vector<int> labels;
  for (const LabeledDescriptor& d : data) labels.push_back(d.label);
  for (int c = 0; c < kExpressionCount; ++c) {
    const auto n = std::count(labels.begin(), labels.end(), c);
    if (n < folds)
      throw DataError("class '" + std::string(expression_name(c)) + "' has " + std::to_string(n) +
                      " samples, fewer than " + std::to_string(folds) + " folds; reduce --folds");
  }
  CrossValidation cv;
  cv.fold_of = stratified_folds(labels, folds, seed);
  cv.predictions.assign(data.size(), -1);
  ConfusionCounts counts{};
  for (int f = 0; f < folds; ++f) {
    std::vector<LabeledDescriptor> train;
    for (std::size_t i = 0; i < data.size(); ++i)
      if (cv.fold_of[i] != f) train.push_back(data[i]);
    const ExpressionModel model = train_descriptors(train, config);
    for (std::size_t i = 0; i < data.size(); ++i)
      if (cv.fold_of[i] == f) {
        cv.predictions[i] = predict(model, data[i].descriptor).label;
        ++counts[static_cast<std::size_t>(data[i].label)][static_cast<std::size_t>(cv.predictions[i])];
      }
  }
  cv.report = metrics(counts);
  return cv;
}

CrossValidation cross_validate(const Manifest& manifest, const PipelineConfig& config, int folds, std::uint64_t seed) {
  validate_config(config);
  require_all_classes(manifest);
  const PreparedData prep = prepare(manifest, config);
  const std::vector<LabeledDescriptor> data = prep.descriptors();
  CrossValidation cv = cross_validate_descriptors(data, config, folds, seed);
  cv.failures = prep.failures;
  cv.report.skipped = static_cast<std::int64_t>(prep.failures.size());
  return cv;
}

std::vector<std::string> record_sources(std::span<const Manifest> manifests) {
  std::vector<std::string> out;
  for (std::size_t m = 0; m < manifests.size(); ++m)
    for (const ManifestRecord& r : manifests[m].records)
      out.push_back(r.source.empty() ? "manifest" + std::to_string(m + 1) : r.source);
  return out;
}

std::vector<SourceReport> fused_protocol(std::span<const Manifest> manifests, const PipelineConfig& config, int repeats,
                                         std::uint64_t seed) {
  if (repeats < 1) throw DataError("repeats must be at least 1");
  Manifest all;
  for (const Manifest& m : manifests) all.records.insert(all.records.end(), m.records.begin(), m.records.end());
  const std::vector<std::string> source_of_record = record_sources(manifests);
  std::vector<std::string> names;
  for (const std::string& s : source_of_record)
    if (std::find(names.begin(), names.end(), s) == names.end()) names.push_back(s);
  if (names.size() < 2) throw DataError("the fused protocol needs at least two sources");
  require_all_classes(all);

  const PreparedData prep = prepare(all, config);
  const std::vector<LabeledDescriptor> data = prep.descriptors();
  std::vector<int> source(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const std::string& s = source_of_record[prep.samples[i].record];
    source[i] = static_cast<int>(std::find(names.begin(), names.end(), s) - names.begin());
  }
  // Groups keyed by (source, class), members in manifest order.
  std::map<std::pair<int, int>, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < data.size(); ++i) groups[{source[i], data[i].label}].push_back(i);

  std::vector<std::vector<EvaluationReport>> per_source(names.size());
  for (int rep = 0; rep < repeats; ++rep) {
    SplitMix64 rng(mix_seed(seed, static_cast<std::uint64_t>(rep)));
    std::vector<bool> is_test(data.size(), false);
    for (auto& [key, members] : groups) {
      std::vector<std::size_t> order = members;
      shuffle(std::span<std::size_t>(order), rng);
      const auto n = static_cast<int>(order.size());
      const int n_test = n >= 2 ? std::max(1, n - round_half_up(0.9 * n)) : 0;
      for (int t = 0; t < n_test; ++t) is_test[order[static_cast<std::size_t>(t)]] = true;
    }
    std::vector<LabeledDescriptor> train;
    for (std::size_t i = 0; i < data.size(); ++i)
      if (!is_test[i]) train.push_back(data[i]);
    const ExpressionModel model = train_descriptors(train, config);
    std::vector<ConfusionCounts> counts(names.size(), ConfusionCounts{});
    std::vector<bool> any(names.size(), false);
    for (std::size_t i = 0; i < data.size(); ++i)
      if (is_test[i]) {
        const int pred = predict(model, data[i].descriptor).label;
        ++counts[static_cast<std::size_t>(source[i])][static_cast<std::size_t>(data[i].label)][static_cast<std::size_t>(pred)];
        any[static_cast<std::size_t>(source[i])] = true;
      }
    for (std::size_t s = 0; s < names.size(); ++s)
      if (any[s]) per_source[s].push_back(metrics(counts[s]));
  }
  std::vector<SourceReport> out;
  for (std::size_t s = 0; s < names.size(); ++s) {
    SourceReport sr;
    sr.source = names[s];
    sr.repeats = static_cast<int>(per_source[s].size());
    if (!per_source[s].empty()) sr.report = average_reports(per_source[s]);
    for (const Failure& f : prep.failures)
      if (source_of_record[f.record] == names[s]) ++sr.report.skipped;
    out.push_back(std::move(sr));
  }
  return out;
}

std::vector<double> cdf_grid() {
  std::vector<double> g;
  for (int i = 0; i <= 30; ++i) g.push_back(i / 100.0);
  return g;
}

std::vector<std::pair<double, double>> landmark_cdf(std::span<const double> errors, std::span<const double> grid) {
  std::vector<std::pair<double, double>> out;
  for (double t : grid) {
    const auto n = std::count_if(errors.begin(), errors.end(), [t](double e) { return e <= t; });
    out.emplace_back(t, errors.empty() ? 0.0 : static_cast<double>(n) / static_cast<double>(errors.size()));
  }
  return out;
}

std::string format_cdf_csv(const std::vector<std::pair<double, double>>& cdf) {
  std::ostringstream out;
  out << "threshold,fraction\n";
  char buf[64];
  for (const auto& [t, f] : cdf) {
    std::snprintf(buf, sizeof buf, "%.2f,%.6f\n", t, f);
    out << buf;
  }
  return out.str();
}

LandmarkEvaluation evaluate_landmarks(const Manifest& manifest, const PipelineConfig& config) {
  const Preprocessor pre(config);
  const std::size_t n = manifest.records.size();
  std::vector<std::optional<LandmarkEvalEntry>> entries(n);
  std::vector<std::string> reasons(n);
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < n; ++i) {
    const ManifestRecord& rec = manifest.records[i];
    if (!rec.landmarks) {
      reasons[i] = "no ground-truth landmarks";
      continue;
    }
    try {
      const LandmarkSet truth_src = read_landmarks(*rec.landmarks);
      const PreprocessResult res = pre.run(read_image(rec.image));
      if (!res.face) {
        reasons[i] = res.failure;
        continue;
      }
      LandmarkEvalEntry e;
      e.path = rec.image.string();
      e.predicted = res.face->landmarks;
      for (LandmarkId id : kAllLandmarks) e.truth[id] = {res.transform->apply(truth_src.pos(id)), Provenance::detected};
      e.error = landmark_error(e.predicted, e.truth);
      entries[i] = std::move(e);
    } catch (const DataError& err) {
      reasons[i] = err.what();
    }
  }
  LandmarkEvaluation out;
  std::vector<double> errors;
  for (std::size_t i = 0; i < n; ++i) {
    if (entries[i]) {
      errors.push_back(entries[i]->error);
      out.entries.push_back(std::move(*entries[i]));
    } else {
      out.skipped.push_back({i, manifest.records[i].image.string(), reasons[i]});
    }
  }
  const std::vector<double> grid = cdf_grid();
  out.cdf = landmark_cdf(errors, grid);
  return out;
}

}  // namespace fer
