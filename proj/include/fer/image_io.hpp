#pragma once

#include <filesystem>
#include <string>

#include "fer/image.hpp"

namespace fer {

/// Binary 8-bit PGM (P5, maxval <= 255).
GrayImage read_pgm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const GrayImage& img);

/// 8-bit PNG, grayscale or RGB(A). Colour is reduced with
/// 0.299R + 0.587G + 0.114B, rounded half-up; alpha is ignored.
GrayImage read_png(const std::filesystem::path& path);

/// Dispatch on file signature: "P5" -> PGM, PNG magic -> PNG.
GrayImage read_image(const std::filesystem::path& path);

}  // namespace fer
