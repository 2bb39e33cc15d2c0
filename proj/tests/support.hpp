#pragma once

#include <filesystem>
#include <string>

#include "fer/image.hpp"
#include "fer/rng.hpp"

namespace testing {

inline fer::GrayImage random_image(int w, int h, std::uint64_t seed, int lo = 0, int hi = 255) {
  fer::SplitMix64 rng(seed);
  fer::GrayImage img(w, h);
  for (auto& p : img.pixels()) p = static_cast<std::uint8_t>(lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(hi - lo + 1))));
  return img;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& name) : path_(std::filesystem::temp_directory_path() / ("fer_test_" + name)) {
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& leaf) const { return path_ / leaf; }

 private:
  std::filesystem::path path_;
};

}  // namespace testing
