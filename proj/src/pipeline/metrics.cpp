#include "fer/metrics.hpp"

#include <cstdio>
#include "json.hpp"
#include <sstream>

#include "fer/error.hpp"

namespace fer {

namespace {
constexpr std::size_t kN = kExpressionCount;

double ratio(double num, double den) { return den > 0 ? num / den : 0.0; }

double harmonic(double p, double r) { return p + r > 0 ? 2.0 * p * r / (p + r) : 0.0; }
}  // namespace

EvaluationReport metrics(const ConfusionCounts& counts) {
  EvaluationReport rep;
  rep.counts = counts;
  std::array<std::int64_t, kN> colsum{};
  std::int64_t diag = 0;
  for (std::size_t i = 0; i < kN; ++i)
    for (std::size_t j = 0; j < kN; ++j) {
      if (counts[i][j] < 0) throw DataError("confusion counts must be non-negative");
      rep.support[i] += counts[i][j];
      colsum[j] += counts[i][j];
      rep.total += counts[i][j];
    }
  if (rep.total == 0) throw DataError("confusion matrix is empty");
  for (std::size_t i = 0; i < kN; ++i) {
    diag += counts[i][i];
    for (std::size_t j = 0; j < kN; ++j)
      rep.confusion[i][j] = 100.0 * ratio(static_cast<double>(counts[i][j]), static_cast<double>(rep.support[i]));
    rep.precision[i] = ratio(static_cast<double>(counts[i][i]), static_cast<double>(colsum[i]));
    rep.recall[i] = ratio(static_cast<double>(counts[i][i]), static_cast<double>(rep.support[i]));
    rep.macro_precision += rep.precision[i] / kN;
    rep.macro_recall += rep.recall[i] / kN;
  }
  rep.macro_f = harmonic(rep.macro_precision, rep.macro_recall);
  rep.accuracy = static_cast<double>(diag) / static_cast<double>(rep.total);
  return rep;
}

EvaluationReport average_reports(std::span<const EvaluationReport> reports) {
  EvaluationReport avg;
  if (reports.empty()) return avg;
  const double w = 1.0 / static_cast<double>(reports.size());
  for (const EvaluationReport& r : reports) {
    for (std::size_t i = 0; i < kN; ++i) {
      for (std::size_t j = 0; j < kN; ++j) {
        avg.counts[i][j] += r.counts[i][j];
        avg.confusion[i][j] += w * r.confusion[i][j];
      }
      avg.precision[i] += w * r.precision[i];
      avg.recall[i] += w * r.recall[i];
      avg.support[i] += r.support[i];
    }
    avg.macro_precision += w * r.macro_precision;
    avg.macro_recall += w * r.macro_recall;
    avg.macro_f += w * r.macro_f;
    avg.accuracy += w * r.accuracy;
    avg.total += r.total;
    avg.skipped += r.skipped;
  }
  return avg;
}

std::string format_report(const EvaluationReport& r) {
  std::ostringstream out;
  char buf[64];
  out << "truth\\pred";
  for (std::size_t j = 0; j < kN; ++j) out << '\t' << expression_name(static_cast<int>(j));
  out << "\tn\n";
  for (std::size_t i = 0; i < kN; ++i) {
    out << expression_name(static_cast<int>(i));
    for (std::size_t j = 0; j < kN; ++j) {
      std::snprintf(buf, sizeof buf, "\t%.2f", r.confusion[i][j]);
      out << buf;
    }
    out << '\t' << r.support[i] << '\n';
  }
  out << "class\tprecision\trecall\n";
  for (std::size_t i = 0; i < kN; ++i) {
    std::snprintf(buf, sizeof buf, "\t%.4f\t%.4f\n", r.precision[i], r.recall[i]);
    out << expression_name(static_cast<int>(i)) << buf;
  }
  std::snprintf(buf, sizeof buf, "%.4f", r.macro_precision);
  out << "macro_precision " << buf << '\n';
  std::snprintf(buf, sizeof buf, "%.4f", r.macro_recall);
  out << "macro_recall " << buf << '\n';
  std::snprintf(buf, sizeof buf, "%.4f", r.macro_f);
  out << "macro_f " << buf << '\n';
  std::snprintf(buf, sizeof buf, "%.4f", r.accuracy);
  out << "accuracy " << buf << '\n';
  out << "samples " << r.total << "\nskipped " << r.skipped << '\n';
  return out.str();
}

std::string report_json(const EvaluationReport& r) {
  nlohmann::ordered_json j;
  j["classes"] = nlohmann::json::array();
  for (std::size_t i = 0; i < kN; ++i) j["classes"].push_back(expression_name(static_cast<int>(i)));
  j["counts"] = r.counts;
  j["confusion_percent"] = r.confusion;
  j["precision"] = r.precision;
  j["recall"] = r.recall;
  j["support"] = r.support;
  j["macro_precision"] = r.macro_precision;
  j["macro_recall"] = r.macro_recall;
  j["macro_f"] = r.macro_f;
  j["accuracy"] = r.accuracy;
  j["samples"] = r.total;
  j["skipped"] = r.skipped;
  return j.dump(2);
}

}  // namespace fer
