#include "fer/synth.hpp"

#include <cmath>
#include <fstream>
#include <numbers>

#include "fer/error.hpp"
#include "fer/expression.hpp"
#include "fer/image_io.hpp"
#include "fer/rng.hpp"

namespace fer::synth {

namespace {

constexpr double kFaceLevel = 170, kBackground = 40, kFeatureLevel = 55;
constexpr double kEyeRadius = 0.055, kNostrilRadius = 0.025;
constexpr double kPatch = 1.0 / 9.0;

// Face-box fractions of the ground-truth points.
constexpr std::array<std::array<double, 2>, kLandmarkCount> kTruth = {{
    {0.30, 0.35}, {0.70, 0.35}, {0.50, 0.58}, {0.35, 0.77}, {0.65, 0.77}, {0.42, 0.245}, {0.58, 0.245}}};

// Patch centres (face fractions) for the textured patches, following the
// layout table with the truth landmarks.
std::array<double, 2> patch_center(int patch) {
  const auto& le = kTruth[0];
  const auto& re = kTruth[1];
  const auto& nose = kTruth[2];
  switch (patch) {
    case 3: return {(le[0] + nose[0]) / 2, (le[1] + nose[1]) / 2};
    case 6: return {(re[0] + nose[0]) / 2, (re[1] + nose[1]) / 2};
    case 8: return {nose[0] - 2 * kPatch, nose[1]};
    case 13: return {nose[0] + 2 * kPatch, nose[1]};
    case 14: return {le[0], le[1] + kPatch};
    case 15: return {re[0], re[1] + kPatch};
    default: throw std::invalid_argument("patch has no texture");
  }
}

bool in_disc(double u, double v, double cu, double cv, double r) {
  return (u - cu) * (u - cu) + (v - cv) * (v - cv) <= r * r;
}

// Intensity of the noiseless face at face-box fractions (u, v); (px, py) are
// the texture coordinates in face-aligned pixels.
double shade(double u, double v, double px, double py, double stripe_c, double stripe_s, double phase,
             double amplitude, double period, bool textures) {
  if (!in_disc(u, v, 0.5, 0.5, 0.5)) return kBackground;
  if (in_disc(u, v, kTruth[0][0], kTruth[0][1], kEyeRadius) || in_disc(u, v, kTruth[1][0], kTruth[1][1], kEyeRadius))
    return kFeatureLevel;
  if (in_disc(u, v, 0.45, 0.58, kNostrilRadius) || in_disc(u, v, 0.55, 0.58, kNostrilRadius)) return kFeatureLevel + 10;
  if (u >= 0.35 && u <= 0.65 && v >= 0.77 && v <= 0.81) return kFeatureLevel;
  if (v >= 0.245 && v <= 0.28 && ((u >= 0.20 && u <= 0.42) || (u >= 0.58 && u <= 0.80))) return kFeatureLevel + 5;
  if (textures) {
    for (int p : kTexturedPatches) {
      const auto c = patch_center(p);
      if (std::abs(u - c[0]) <= kPatch / 2 && std::abs(v - c[1]) <= kPatch / 2) {
        const double t = (px * stripe_c + py * stripe_s) / period + phase;
        return kFaceLevel + (t - std::floor(t) < 0.5 ? amplitude : -amplitude);
      }
    }
  }
  // Smooth radial shading, brighter towards the centre.
  const double r2 = 4.0 * ((u - 0.5) * (u - 0.5) + (v - 0.5) * (v - 0.5));
  return kFaceLevel + 40.0 * (0.5 - r2);
}

}  // namespace

Face render(int label, std::uint64_t seed, const Options& o) {
  if (label < 0 || label >= kExpressionCount) throw DataError("label out of range");
  SplitMix64 rng(mix_seed(seed, static_cast<std::uint64_t>(label)));
  auto jitter = [&](double range) { return (2.0 * rng.uniform() - 1.0) * range; };

  const double size = o.face_size * (1.0 + jitter(o.jitter_scale));
  const double cx = o.canvas / 2.0 + jitter(o.jitter_shift);
  const double cy = o.canvas / 2.0 + jitter(o.jitter_shift);
  const double angle = jitter(o.jitter_angle_deg) * std::numbers::pi / 180.0;
  const double theta = label * std::numbers::pi / kExpressionCount + jitter(4.0) * std::numbers::pi / 180.0;
  const double phase = rng.uniform();
  const double amplitude = o.texture_amplitude * (1.0 + jitter(0.15));
  const double ca = std::cos(angle), sa = std::sin(angle);

  Face f;
  f.label = label;
  f.image = GrayImage(o.canvas, o.canvas);
  // Forward map from face fractions to source pixels.
  auto to_source = [&](double u, double v) {
    const double dx = (u - 0.5) * size, dy = (v - 0.5) * size;
    return Point2{cx + ca * dx - sa * dy, cy + sa * dx + ca * dy};
  };
  constexpr std::array<double, 2> kSub = {0.25, 0.75};
  for (int y = 0; y < o.canvas; ++y)
    for (int x = 0; x < o.canvas; ++x) {
      double acc = 0;
      for (double sy : kSub)
        for (double sx : kSub) {
          const double dx = x + sx - 0.5 - cx, dy = y + sy - 0.5 - cy;
          const double fx = ca * dx + sa * dy, fy = -sa * dx + ca * dy;  // face-aligned pixels
          acc += shade(fx / size + 0.5, fy / size + 0.5, fx, fy, std::cos(theta), std::sin(theta), phase, amplitude,
                       o.texture_period, o.textures);
        }
      f.image.at(x, y) = clamp_u8(round_half_up(acc / 4.0 + o.noise_sigma * rng.normal()));
    }
  for (std::size_t i = 0; i < kTruth.size(); ++i)
    f.truth[static_cast<LandmarkId>(i)] = {to_source(kTruth[i][0], kTruth[i][1]), Provenance::detected};
  f.box = {round_half_up(cx - size / 2), round_half_up(cy - size / 2), round_half_up(size), round_half_up(size)};
  return f;
}

std::filesystem::path write_dataset(const std::filesystem::path& dir, int per_class, std::uint64_t seed,
                                    const Options& options) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const fs::path manifest = dir / "manifest.csv";
  std::ofstream out(manifest);
  if (!out) throw DataError("cannot write " + manifest.string());
  out << "# synthetic faces\npath,label,landmarks\n";
  for (int c = 0; c < kExpressionCount; ++c)
    for (int i = 0; i < per_class; ++i) {
      const std::string stem = std::string(expression_name(c)) + "_" + std::to_string(i);
      const Face face = render(c, mix_seed(seed, static_cast<std::uint64_t>(c * 100003 + i)), options);
      write_pgm(dir / (stem + ".pgm"), face.image);
      write_landmarks(dir / (stem + ".pts"), face.truth);
      out << stem << ".pgm," << expression_name(c) << ',' << stem << ".pts\n";
    }
  return manifest;
}

}  // namespace fer::synth
