#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "fer/image.hpp"
#include "fer/landmarks.hpp"

namespace fer::synth {

/// Rendering controls for the synthetic face fixture. Geometry is given as
/// fractions of the square face box.
struct Options {
  int canvas = 160;
  double face_size = 120.0;
  double jitter_shift = 4.0;      // pixels, uniform +-
  double jitter_scale = 0.04;     // relative, uniform +-
  double jitter_angle_deg = 3.0;  // uniform +-
  double noise_sigma = 2.0;
  double texture_amplitude = 30.0;
  double texture_period = 4.0;  // pixels
  bool textures = true;
};

/// Patches whose area carries the class-specific stripe texture.
inline constexpr std::array<int, 6> kTexturedPatches = {3, 6, 8, 13, 14, 15};

struct Face {
  GrayImage image;
  LandmarkSet truth;  // source-image coordinates
  BoundingBox box;    // rendered face box
  int label = 0;
};

/// Bright face disc with dark eyes, nostrils, lip bar and brows; stripes
/// at a class-specific orientation fill the textured patches.
Face render(int label, std::uint64_t seed, const Options& options = {});

/// Writes `per_class` faces per expression as PGM plus landmark files and
/// `manifest.csv` (path,label,landmarks) into `dir`. Returns the manifest path.
std::filesystem::path write_dataset(const std::filesystem::path& dir, int per_class, std::uint64_t seed,
                                    const Options& options = {});

}  // namespace fer::synth
