#include "fer/lbp.hpp"

#include <bit>
#include <sstream>
#include <stdexcept>

namespace fer {

namespace {

struct U2Table {
  std::array<std::uint8_t, 256> bin{};
  U2Table() {
    int next = 0;
    for (int label = 0; label < 256; ++label)
      bin[static_cast<std::size_t>(label)] =
          static_cast<std::uint8_t>(uniformity(static_cast<std::uint8_t>(label)) <= 2 ? next++ : 58);
  }
};

const U2Table& u2_table() {
  static const U2Table table;
  return table;
}

}  // namespace

int bin_count(LbpVariant v) {
  switch (v) {
    case LbpVariant::bins256: return 256;
    case LbpVariant::bins32: return 32;
    case LbpVariant::bins16: return 16;
    case LbpVariant::u2: return 59;
    case LbpVariant::riu2: return 10;
  }
  return 0;
}

std::string_view variant_name(LbpVariant v) {
  switch (v) {
    case LbpVariant::bins256: return "bins256";
    case LbpVariant::bins32: return "bins32";
    case LbpVariant::bins16: return "bins16";
    case LbpVariant::u2: return "u2";
    case LbpVariant::riu2: return "riu2";
  }
  return "?";
}

std::optional<LbpVariant> parse_variant(std::string_view name) {
  for (LbpVariant v : {LbpVariant::bins256, LbpVariant::bins32, LbpVariant::bins16, LbpVariant::u2, LbpVariant::riu2})
    if (variant_name(v) == name) return v;
  if (name == "256") return LbpVariant::bins256;
  if (name == "32") return LbpVariant::bins32;
  if (name == "16") return LbpVariant::bins16;
  if (name == "59") return LbpVariant::u2;
  if (name == "10") return LbpVariant::riu2;
  return std::nullopt;
}

std::uint8_t lbp_code(std::uint8_t center, std::span<const std::uint8_t, 8> neighbors) {
  unsigned code = 0;
  for (unsigned n = 0; n < 8; ++n)
    if (neighbors[n] >= center) code |= 1u << n;
  return static_cast<std::uint8_t>(code);
}

LabelImage lbp_map(const GrayImage& img) {
  if (img.width() < 3 || img.height() < 3) throw std::invalid_argument("lbp_map needs at least 3x3 pixels");
  const int w = img.width() - 2;
  const int h = img.height() - 2;
  LabelImage out(w, h);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    const std::uint8_t* up = img.row(y);
    const std::uint8_t* mid = img.row(y + 1);
    const std::uint8_t* dn = img.row(y + 2);
    std::uint8_t* dst = out.row(y);
    for (int x = 0; x < w; ++x) {
      const int c = mid[x + 1];
      dst[x] = static_cast<std::uint8_t>((mid[x + 2] >= c) | (up[x + 2] >= c) << 1 | (up[x + 1] >= c) << 2 |
                                         (up[x] >= c) << 3 | (mid[x] >= c) << 4 | (dn[x] >= c) << 5 |
                                         (dn[x + 1] >= c) << 6 | (dn[x + 2] >= c) << 7);
    }
  }
  return out;
}

int uniformity(std::uint8_t label) {
  const auto rotated = static_cast<std::uint8_t>((label >> 1) | (label << 7));
  return std::popcount(static_cast<unsigned>(label ^ rotated));
}

int bin_index(std::uint8_t label, LbpVariant v) {
  switch (v) {
    case LbpVariant::bins256: return label;
    case LbpVariant::bins32: return label >> 3;
    case LbpVariant::bins16: return label >> 4;
    case LbpVariant::u2: return u2_table().bin[label];
    case LbpVariant::riu2: return uniformity(label) <= 2 ? std::popcount(static_cast<unsigned>(label)) : 9;
  }
  return 0;
}

std::vector<std::int64_t> histogram_counts(const LabelImage& labels, LbpVariant v) {
  std::array<std::int64_t, 256> raw{};
  for (std::uint8_t l : labels.pixels()) ++raw[l];
  std::vector<std::int64_t> h(static_cast<std::size_t>(bin_count(v)), 0);
  for (int l = 0; l < 256; ++l) h[static_cast<std::size_t>(bin_index(static_cast<std::uint8_t>(l), v))] += raw[static_cast<std::size_t>(l)];
  return h;
}

std::vector<double> histogram(const LabelImage& labels, LbpVariant v) {
  const auto counts = histogram_counts(labels, v);
  const double n = static_cast<double>(labels.pixels().size());
  std::vector<double> h(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) h[i] = static_cast<double>(counts[i]) / n;
  return h;
}

FeatureLayout::Cell FeatureLayout::cell(std::size_t i) const {
  const auto bins = static_cast<std::size_t>(bin_count(variant));
  const std::size_t bin = i % bins;
  const std::size_t block = (i / bins) % kBlocks;
  const std::size_t pos = i / (bins * kBlocks);
  return {patch_ids.at(pos), static_cast<int>(block), static_cast<int>(bin)};
}

std::vector<double> patch_descriptor(const GrayImage& face, const BoundingBox& box, LbpVariant v) {
  const LabelImage labels = lbp_map(extract_patch(face, box));
  std::vector<double> out;
  out.reserve(4 * static_cast<std::size_t>(bin_count(v)));
  for (const LabelImage& block : split_blocks(labels)) {
    const auto h = histogram(block, v);
    out.insert(out.end(), h.begin(), h.end());
  }
  return out;
}

FaceDescriptor describe_face(const GrayImage& face, const PatchLayout& layout, LbpVariant v) {
  FaceDescriptor d;
  d.variant = v;
  for (std::size_t k = 0; k < layout.boxes.size(); ++k) d.patches[k] = patch_descriptor(face, layout.boxes[k], v);
  return d;
}

FeatureVector assemble_features(const FaceDescriptor& desc, std::span<const int> patch_ids) {
  if (patch_ids.empty()) throw std::invalid_argument("feature vector needs at least one patch");
  FeatureVector fv;
  fv.layout.variant = desc.variant;
  fv.layout.patch_ids.assign(patch_ids.begin(), patch_ids.end());
  fv.values.reserve(fv.layout.size());
  for (int id : patch_ids) {
    if (id < 1 || id > kPatchCount) throw std::out_of_range("patch id out of range");
    const auto& p = desc.patch(id);
    fv.values.insert(fv.values.end(), p.begin(), p.end());
  }
  return fv;
}

FeatureVector feature_vector(const GrayImage& face, const LandmarkSet& landmarks, std::span<const int> patch_ids,
                             LbpVariant v) {
  const PatchLayout layout = layout_patches(landmarks, face.width());
  FaceDescriptor d;
  d.variant = v;
  for (int id : patch_ids) {
    if (id < 1 || id > kPatchCount) throw std::out_of_range("patch id out of range");
    d.patches[static_cast<std::size_t>(id - 1)] = patch_descriptor(face, layout.patch(id), v);
  }
  return assemble_features(d, patch_ids);
}

std::string feature_csv_header(const FeatureLayout& layout) {
  std::ostringstream out;
  for (std::size_t i = 0; i < layout.size(); ++i) {
    const auto c = layout.cell(i);
    if (i) out << ',';
    out << 'P' << c.patch << "_b" << c.block << "_h" << c.bin;
  }
  return out.str();
}

namespace serial {

LabelImage lbp_map(const GrayImage& img) {
  if (img.width() < 3 || img.height() < 3) throw std::invalid_argument("lbp_map needs at least 3x3 pixels");
  LabelImage out(img.width() - 2, img.height() - 2);
  for (int y = 1; y + 1 < img.height(); ++y)
    for (int x = 1; x + 1 < img.width(); ++x) {
      std::array<std::uint8_t, 8> nb{};
      for (std::size_t n = 0; n < 8; ++n) nb[n] = img.at(x + kNeighborOffsets[n][0], y + kNeighborOffsets[n][1]);
      out.at(x - 1, y - 1) = lbp_code(img.at(x, y), nb);
    }
  return out;
}

}  // namespace serial

}  // namespace fer
