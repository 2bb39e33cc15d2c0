#include <sodium.h>

#include <bit>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "fer/error.hpp"
#include "fer/pipeline.hpp"

namespace fer {

namespace {

std::string fmt(double v) {
  char buf[40];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string encode(const double* data, std::size_t n) {
  if (n == 0) return "-";
  std::string bytes(n * 8, '\0');
  for (std::size_t i = 0; i < n; ++i) {
    const auto bits = std::bit_cast<std::uint64_t>(data[i]);
    for (int b = 0; b < 8; ++b) bytes[i * 8 + static_cast<std::size_t>(b)] = static_cast<char>((bits >> (8 * b)) & 0xFF);
  }
  const int variant = sodium_base64_VARIANT_ORIGINAL;
  std::string out(sodium_base64_encoded_len(bytes.size(), variant), '\0');
  sodium_bin2base64(out.data(), out.size(), reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size(), variant);
  out.resize(out.size() - 1);  // trailing NUL
  return out;
}

std::vector<double> decode(const std::string& text, std::size_t n, int line) {
  if (text == "-") {
    if (n != 0) throw ParseError("empty array payload for non-empty shape", line);
    return {};
  }
  std::vector<unsigned char> bytes(text.size());
  std::size_t len = 0;
  if (sodium_base642bin(bytes.data(), bytes.size(), text.data(), text.size(), nullptr, &len, nullptr,
                        sodium_base64_VARIANT_ORIGINAL) != 0)
    throw ParseError("invalid base64 payload", line);
  if (len != n * 8) throw ParseError("array payload does not match its shape", line);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(bytes[i * 8 + static_cast<std::size_t>(b)]) << (8 * b);
    out[i] = std::bit_cast<double>(bits);
  }
  return out;
}

void put_vector(std::ostream& out, const char* name, const Vector& v) {
  out << "array " << name << " 1 " << v.size() << ' ' << encode(v.data(), static_cast<std::size_t>(v.size())) << '\n';
}

void put_matrix(std::ostream& out, const char* name, const Matrix& m) {
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = m;
  out << "array " << name << " 2 " << m.rows() << ' ' << m.cols() << ' '
      << encode(rm.data(), static_cast<std::size_t>(rm.size())) << '\n';
}

std::string pair_name(int a, int b) { return std::string(expression_name(a)) + "-" + std::string(expression_name(b)); }

struct Entry {
  std::vector<std::string> tokens;
  int line = 0;
};

struct Section {
  std::string name;
  int line = 0;
  std::vector<Entry> entries;
};

double to_double(const std::string& s, int line) {
  double v = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw ParseError("bad number '" + s + "'", line);
  return v;
}

long long to_int(const std::string& s, int line) {
  long long v = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw ParseError("bad integer '" + s + "'", line);
  return v;
}

int to_expression(const std::string& s, int line) {
  const auto e = parse_expression(s);
  if (!e) throw ParseError("unknown expression '" + s + "'", line);
  return static_cast<int>(*e);
}

// Key/value view of one section; every key must be consumed exactly once.
class Fields {
 public:
  explicit Fields(const Section& s) : section_(s) {
    for (const Entry& e : s.entries) {
      const std::string key = e.tokens[0] == "array" && e.tokens.size() > 1 ? "array " + e.tokens[1] : e.tokens[0];
      if (!map_.emplace(key, &e).second) throw ParseError("duplicate key '" + key + "'", e.line);
    }
  }

  const Entry& get(const std::string& key, std::size_t ntokens = 0) {
    const auto it = map_.find(key);
    if (it == map_.end()) throw ParseError("section [" + section_.name + "] lacks '" + key + "'", section_.line);
    used_.insert(key);
    if (ntokens && it->second->tokens.size() != ntokens)
      throw ParseError("'" + key + "' has the wrong number of fields", it->second->line);
    return *it->second;
  }
  double num(const std::string& key) {
    const Entry& e = get(key, 2);
    return to_double(e.tokens[1], e.line);
  }
  long long integer(const std::string& key) {
    const Entry& e = get(key, 2);
    return to_int(e.tokens[1], e.line);
  }
  const std::string& word(const std::string& key) { return get(key, 2).tokens[1]; }

  Matrix array(const std::string& name, int ndim) {
    const Entry& e = get("array " + name);
    const auto& t = e.tokens;
    if (t.size() < 4 || to_int(t[2], e.line) != ndim || t.size() != static_cast<std::size_t>(ndim) + 4)
      throw ParseError("array '" + name + "' must have " + std::to_string(ndim) + " dimensions", e.line);
    const long long rows = to_int(t[3], e.line);
    const long long cols = ndim == 2 ? to_int(t[4], e.line) : 1;
    if (rows < 0 || cols < 0) throw ParseError("negative array extent", e.line);
    const std::vector<double> v = decode(t.back(), static_cast<std::size_t>(rows * cols), e.line);
    Matrix m(rows, cols);
    for (long long r = 0; r < rows; ++r)
      for (long long c = 0; c < cols; ++c) m(r, c) = v[static_cast<std::size_t>(r * cols + c)];
    return m;
  }

  void finish() const {
    for (const auto& [key, e] : map_)
      if (!used_.count(key)) throw ParseError("unknown key '" + key + "' in [" + section_.name + "]", e->line);
  }

 private:
  const Section& section_;
  std::map<std::string, const Entry*> map_;
  std::set<std::string> used_;
};

void check(bool ok, const std::string& what, int line) {
  if (!ok) throw ParseError(what, line);
}

}  // namespace

std::string format_model(const ExpressionModel& m) {
  std::ostringstream out;
  const PipelineConfig& c = m.config;
  out << "FERSPM " << ExpressionModel::kVersion << '\n';
  out << "[config]\n"
      << "resolution " << c.resolution << '\n'
      << "variant " << variant_name(c.variant) << '\n'
      << "top_k " << c.top_k << '\n'
      << "seed " << c.seed << '\n'
      << "grid_search " << (c.grid_search ? 1 : 0) << '\n'
      << "saliency_folds " << c.saliency_folds << '\n'
      << "detect_landmarks " << (c.detect_landmarks ? 1 : 0) << '\n'
      << "pca_energy " << fmt(c.pca.energy) << '\n'
      << "pca_max_components " << c.pca.max_components << '\n'
      << "svm_c " << fmt(c.svm.c) << '\n'
      << "svm_gamma " << fmt(c.svm.gamma) << '\n'
      << "svm_tol " << fmt(c.svm.tol) << '\n'
      << "svm_max_passes " << c.svm.max_passes << '\n'
      << "detect_scale_step " << fmt(c.detect.scale_step) << '\n'
      << "detect_min_size " << c.detect.min_size << '\n'
      << "detect_min_neighbors " << c.detect.min_neighbors << '\n'
      << "detect_group_eps " << fmt(c.detect.group_eps) << '\n'
      << "mouth_top " << fmt(c.corners.mouth_top) << '\n'
      << "mouth_bottom " << fmt(c.corners.mouth_bottom) << '\n'
      << "mouth_half_width " << fmt(c.corners.mouth_half_width) << '\n'
      << "brow_top " << fmt(c.corners.brow_top) << '\n'
      << "brow_bottom " << fmt(c.corners.brow_bottom) << '\n'
      << "brow_half_width " << fmt(c.corners.brow_half_width) << '\n'
      << "area_fraction " << fmt(c.corners.area_fraction) << '\n'
      << "symmetry_ratio_min " << fmt(c.corners.symmetry_ratio_min) << '\n'
      << "dilate_radius " << c.corners.dilate_radius << '\n'
      << "brow_window_fraction " << fmt(c.corners.brow_window_fraction) << '\n'
      << "brow_offset " << c.corners.brow_offset << '\n';
  out << "[selection]\nk " << m.selection.k << '\n';
  for (int p = 0; p < kPairCount; ++p) {
    const auto [a, b] = all_pairs()[static_cast<std::size_t>(p)];
    out << pair_name(a, b);
    for (int id : m.selection.patches[static_cast<std::size_t>(p)]) out << ' ' << id;
    out << '\n';
  }
  for (const PairClassifier& pc : m.ensemble.models) {
    out << "[classifier " << pair_name(pc.positive, pc.negative) << "]\n"
        << "positive " << expression_name(pc.positive) << '\n'
        << "negative " << expression_name(pc.negative) << '\n'
        << "patches";
    for (int id : pc.patch_ids) out << ' ' << id;
    out << '\n'
        << "gamma " << fmt(pc.svm.gamma) << '\n'
        << "c " << fmt(pc.svm.c) << '\n'
        << "bias " << fmt(pc.svm.bias) << '\n';
    put_vector(out, "pca_mean", pc.pca.mean);
    put_matrix(out, "pca_components", pc.pca.components);
    put_vector(out, "pca_eigenvalues", pc.pca.eigenvalues);
    put_matrix(out, "support", pc.svm.support);
    put_vector(out, "coef", pc.svm.coef);
  }
  out << "[end]\n";
  return out.str();
}

ExpressionModel parse_model(const std::string& text) {
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  std::vector<Section> sections;
  bool header = false, ended = false;
  while (std::getline(in, raw)) {
    ++line_no;
    std::istringstream ls(raw);
    std::vector<std::string> toks;
    for (std::string t; ls >> t;) toks.push_back(t);
    if (toks.empty()) continue;
    if (!header) {
      check(toks.size() == 2 && toks[0] == "FERSPM", "missing FERSPM header", line_no);
      check(toks[1] == std::to_string(ExpressionModel::kVersion), "unsupported model version " + toks[1], line_no);
      header = true;
      continue;
    }
    check(!ended, "content after [end]", line_no);
    if (toks[0].front() == '[') {
      std::string name = raw.substr(raw.find('[') + 1);
      check(name.find(']') != std::string::npos, "unterminated section name", line_no);
      name.erase(name.find(']'));
      if (name == "end") {
        ended = true;
        continue;
      }
      sections.push_back({name, line_no, {}});
      continue;
    }
    check(!sections.empty(), "entry outside a section", line_no);
    sections.back().entries.push_back({toks, line_no});
  }
  check(header, "missing FERSPM header", 1);
  check(ended, "model file is truncated (no [end])", line_no + 1);
  check(sections.size() == 2 + kPairCount && sections[0].name == "config" && sections[1].name == "selection",
        "expected [config], [selection] and 15 classifier sections", 1);

  ExpressionModel m;
  PipelineConfig& c = m.config;
  {
    Fields f(sections[0]);
    c.resolution = static_cast<int>(f.integer("resolution"));
    const auto v = parse_variant(f.word("variant"));
    check(v.has_value(), "unknown LBP variant", sections[0].line);
    c.variant = *v;
    c.top_k = static_cast<int>(f.integer("top_k"));
    c.seed = static_cast<std::uint64_t>(std::stoull(f.word("seed")));
    c.grid_search = f.integer("grid_search") != 0;
    c.saliency_folds = static_cast<int>(f.integer("saliency_folds"));
    c.detect_landmarks = f.integer("detect_landmarks") != 0;
    c.pca.energy = f.num("pca_energy");
    c.pca.max_components = static_cast<int>(f.integer("pca_max_components"));
    c.svm.c = f.num("svm_c");
    c.svm.gamma = f.num("svm_gamma");
    c.svm.tol = f.num("svm_tol");
    c.svm.max_passes = static_cast<long>(f.integer("svm_max_passes"));
    c.detect.scale_step = f.num("detect_scale_step");
    c.detect.min_size = static_cast<int>(f.integer("detect_min_size"));
    c.detect.min_neighbors = static_cast<int>(f.integer("detect_min_neighbors"));
    c.detect.group_eps = f.num("detect_group_eps");
    c.corners.mouth_top = f.num("mouth_top");
    c.corners.mouth_bottom = f.num("mouth_bottom");
    c.corners.mouth_half_width = f.num("mouth_half_width");
    c.corners.brow_top = f.num("brow_top");
    c.corners.brow_bottom = f.num("brow_bottom");
    c.corners.brow_half_width = f.num("brow_half_width");
    c.corners.area_fraction = f.num("area_fraction");
    c.corners.symmetry_ratio_min = f.num("symmetry_ratio_min");
    c.corners.dilate_radius = static_cast<int>(f.integer("dilate_radius"));
    c.corners.brow_window_fraction = f.num("brow_window_fraction");
    c.corners.brow_offset = static_cast<int>(f.integer("brow_offset"));
    f.finish();
    try {
      validate_config(c);
    } catch (const DataError& e) {
      throw ParseError(e.what(), sections[0].line);
    }
  }
  {
    Fields f(sections[1]);
    m.selection.k = static_cast<int>(f.integer("k"));
    check(m.selection.k == c.top_k, "selection size differs from top_k", sections[1].line);
    for (int p = 0; p < kPairCount; ++p) {
      const auto [a, b] = all_pairs()[static_cast<std::size_t>(p)];
      const Entry& e = f.get(pair_name(a, b), static_cast<std::size_t>(m.selection.k) + 1);
      std::set<int> distinct;
      for (std::size_t i = 1; i < e.tokens.size(); ++i) {
        const int id = static_cast<int>(to_int(e.tokens[i], e.line));
        check(id >= 1 && id <= kPatchCount && distinct.insert(id).second, "invalid patch list", e.line);
        m.selection.patches[static_cast<std::size_t>(p)].push_back(id);
      }
    }
    f.finish();
  }
  std::set<int> seen_pairs;
  for (std::size_t s = 2; s < sections.size(); ++s) {
    const Section& sec = sections[s];
    Fields f(sec);
    PairClassifier pc;
    pc.positive = to_expression(f.word("positive"), f.get("positive").line);
    pc.negative = to_expression(f.word("negative"), f.get("negative").line);
    check(pc.positive < pc.negative && sec.name == "classifier " + pair_name(pc.positive, pc.negative),
          "classifier section name does not match its classes", sec.line);
    const int pair = pair_index(pc.positive, pc.negative);
    check(seen_pairs.insert(pair).second, "duplicate classifier section", sec.line);
    const Entry& pe = f.get("patches");
    for (std::size_t i = 1; i < pe.tokens.size(); ++i) pc.patch_ids.push_back(static_cast<int>(to_int(pe.tokens[i], pe.line)));
    check(pc.patch_ids == m.selection.sorted(pair), "classifier patches differ from the selection", pe.line);
    pc.svm.gamma = f.num("gamma");
    pc.svm.c = f.num("c");
    pc.svm.bias = f.num("bias");
    pc.pca.mean = f.array("pca_mean", 1).col(0);
    pc.pca.components = f.array("pca_components", 2);
    pc.pca.eigenvalues = f.array("pca_eigenvalues", 1).col(0);
    pc.svm.support = f.array("support", 2);
    pc.svm.coef = f.array("coef", 1).col(0);
    f.finish();

    const FeatureLayout layout{pc.patch_ids, c.variant};
    check(pc.pca.mean.size() == static_cast<Eigen::Index>(layout.size()), "PCA input size does not match the features",
          sec.line);
    check(pc.pca.components.rows() == pc.pca.mean.size() && pc.pca.components.cols() == pc.pca.eigenvalues.size(),
          "PCA shapes are inconsistent", sec.line);
    check(pc.svm.support.cols() == pc.pca.components.cols() && pc.svm.coef.size() == pc.svm.support.rows(),
          "SVM shapes are inconsistent with the projection", sec.line);
    m.ensemble.models.push_back(std::move(pc));
  }
  return m;
}

void save_model(const ExpressionModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write model " + path.string());
  out << format_model(model);
  if (!out) throw DataError("failed writing model " + path.string());
}

ExpressionModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_model(ss.str());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.detail(), e.line());
  }
}

}  // namespace fer
