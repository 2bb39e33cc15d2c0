#include "fer/manifest.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "fer/error.hpp"
#include "fer/expression.hpp"

namespace fer {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

Manifest parse_manifest(const std::string& text, const std::filesystem::path& base_dir, bool check_files) {
  namespace fs = std::filesystem;
  Manifest m;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  bool first = true;
  auto resolve = [&](const std::string& p) {
    const fs::path path(p);
    return (path.is_absolute() ? path : base_dir / path).lexically_normal();
  };
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    if (trim(raw).empty()) continue;
    const std::vector<std::string> f = split_csv(raw);
    if (first && !f.empty() && f[0] == "path") {
      first = false;
      continue;
    }
    first = false;
    if (f.size() < 2 || f.size() > 4) throw ParseError("expected 2 to 4 fields: path,label[,landmarks[,source]]", line_no);
    if (f[0].empty()) throw ParseError("empty image path", line_no);
    const auto label = parse_expression(f[1]);
    if (!label) throw ParseError("unknown label '" + f[1] + "'", line_no);

    ManifestRecord r;
    r.image = resolve(f[0]);
    r.label = static_cast<int>(*label);
    r.line = line_no;
    if (f.size() >= 3 && !f[2].empty()) r.landmarks = resolve(f[2]);
    if (f.size() == 4) r.source = f[3];
    if (!seen.insert(r.image.string()).second) throw ParseError("duplicate image path '" + f[0] + "'", line_no);
    if (check_files) {
      if (!fs::is_regular_file(r.image)) throw ParseError("image not found: " + r.image.string(), line_no);
      if (r.landmarks && !fs::is_regular_file(*r.landmarks))
        throw ParseError("landmark file not found: " + r.landmarks->string(), line_no);
    }
    m.records.push_back(std::move(r));
  }
  return m;
}

Manifest load_manifest(const std::filesystem::path& path, bool check_files) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_manifest(ss.str(), path.parent_path(), check_files);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.detail(), e.line());
  }
}

std::string format_manifest(const Manifest& m) {
  std::ostringstream out;
  out << "path,label,landmarks,source\n";
  for (const ManifestRecord& r : m.records) {
    out << r.image.string() << ',' << expression_name(r.label) << ',';
    if (r.landmarks) out << r.landmarks->string();
    out << ',' << r.source << '\n';
  }
  return out.str();
}

std::vector<int> class_counts(const Manifest& m) {
  std::vector<int> counts(kExpressionCount, 0);
  for (const ManifestRecord& r : m.records) ++counts[static_cast<std::size_t>(r.label)];
  return counts;
}

}  // namespace fer
