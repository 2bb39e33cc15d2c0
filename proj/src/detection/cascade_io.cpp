#include <fstream>
#include <sstream>

#include "fer/detection.hpp"
#include "fer/error.hpp"

namespace fer {

namespace {

class LineReader {
 public:
  explicit LineReader(const std::string& text) : in_(text) {}

  // Next non-blank, non-comment line split into tokens. Throws at EOF.
  std::vector<std::string> next(const char* expecting) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      std::istringstream ls(line);
      std::vector<std::string> toks;
      for (std::string t; ls >> t;) toks.push_back(t);
      if (!toks.empty()) return toks;
    }
    throw ParseError(std::string("unexpected end of cascade, expected ") + expecting, line_no_ + 1);
  }

  bool at_end() {
    std::streampos pos = in_.tellg();
    int saved = line_no_;
    std::string line;
    while (std::getline(in_, line)) {
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      if (line.find_first_not_of(" \t\r") != std::string::npos) {
        in_.clear();
        in_.seekg(pos);
        line_no_ = saved;
        return false;
      }
    }
    return true;
  }

  int line() const { return line_no_; }

 private:
  std::istringstream in_;
  int line_no_ = 0;
};

double to_double(const std::string& s, int line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError("bad number '" + s + "'", line);
  }
}

int to_int(const std::string& s, int line) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError("bad integer '" + s + "'", line);
  }
}

void expect(const std::vector<std::string>& toks, const char* keyword, std::size_t count, int line) {
  if (toks[0] != keyword) throw ParseError(std::string("expected ") + keyword + ", got '" + toks[0] + "'", line);
  if (toks.size() != count)
    throw ParseError(std::string(keyword) + " takes " + std::to_string(count - 1) + " fields", line);
}

}  // namespace

void validate_cascade(const HaarCascade& c) {
  if (c.window_w < 1 || c.window_h < 1) throw DataError("cascade window must be at least 1x1");
  if (c.stages.empty()) throw DataError("cascade has no stages");
  for (std::size_t s = 0; s < c.stages.size(); ++s) {
    const CascadeStage& st = c.stages[s];
    if (st.weak.empty()) throw DataError("stage " + std::to_string(s) + " has no weak classifiers");
    for (const WeakClassifier& wk : st.weak) {
      if (wk.rects.size() < 2 || wk.rects.size() > 3)
        throw DataError("stage " + std::to_string(s) + ": weak classifier needs 2 or 3 rectangles");
      for (const HaarRect& r : wk.rects) {
        if (r.w < 1 || r.h < 1 || r.x < 0 || r.y < 0 || r.x + r.w > c.window_w || r.y + r.h > c.window_h)
          throw DataError("stage " + std::to_string(s) + ": rectangle outside the canonical window");
      }
    }
  }
}

HaarCascade parse_cascade(const std::string& text) {
  LineReader rd(text);
  HaarCascade c;
  auto head = rd.next("CASCADE header");
  expect(head, "CASCADE", 5, rd.line());
  if (head[1] != "v1") throw ParseError("unsupported cascade version '" + head[1] + "'", rd.line());
  c.window_w = to_int(head[2], rd.line());
  c.window_h = to_int(head[3], rd.line());
  const int nstages = to_int(head[4], rd.line());
  if (nstages < 1) throw ParseError("cascade needs at least one stage", rd.line());

  for (int s = 0; s < nstages; ++s) {
    auto st = rd.next("STAGE");
    expect(st, "STAGE", 3, rd.line());
    CascadeStage stage;
    stage.threshold = to_double(st[1], rd.line());
    const int nweak = to_int(st[2], rd.line());
    if (nweak < 1) throw ParseError("stage needs at least one weak classifier", rd.line());
    for (int k = 0; k < nweak; ++k) {
      auto wk = rd.next("WEAK");
      expect(wk, "WEAK", 5, rd.line());
      WeakClassifier weak;
      weak.threshold = to_double(wk[1], rd.line());
      weak.left = to_double(wk[2], rd.line());
      weak.right = to_double(wk[3], rd.line());
      const int nrect = to_int(wk[4], rd.line());
      if (nrect < 2 || nrect > 3) throw ParseError("weak classifier needs 2 or 3 rectangles", rd.line());
      for (int r = 0; r < nrect; ++r) {
        auto rt = rd.next("RECT");
        expect(rt, "RECT", 6, rd.line());
        weak.rects.push_back({to_int(rt[1], rd.line()), to_int(rt[2], rd.line()), to_int(rt[3], rd.line()),
                              to_int(rt[4], rd.line()), to_double(rt[5], rd.line())});
      }
      stage.weak.push_back(std::move(weak));
    }
    c.stages.push_back(std::move(stage));
  }
  if (!rd.at_end()) throw ParseError("trailing content after last stage", rd.line() + 1);
  validate_cascade(c);
  return c;
}

HaarCascade load_cascade(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open cascade " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_cascade(ss.str());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.detail(), e.line());
  }
}

std::string format_cascade(const HaarCascade& c) {
  std::ostringstream out;
  out.precision(17);
  out << "CASCADE v1 " << c.window_w << ' ' << c.window_h << ' ' << c.stages.size() << '\n';
  for (const CascadeStage& st : c.stages) {
    out << "STAGE " << st.threshold << ' ' << st.weak.size() << '\n';
    for (const WeakClassifier& wk : st.weak) {
      out << "WEAK " << wk.threshold << ' ' << wk.left << ' ' << wk.right << ' ' << wk.rects.size() << '\n';
      for (const HaarRect& r : wk.rects)
        out << "RECT " << r.x << ' ' << r.y << ' ' << r.w << ' ' << r.h << ' ' << r.weight << '\n';
    }
  }
  return out.str();
}

}  // namespace fer
