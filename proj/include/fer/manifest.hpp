#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace fer {

struct ManifestRecord {
  std::filesystem::path image;
  int label = 0;
  std::optional<std::filesystem::path> landmarks;
  std::string source;  // empty when the column is absent
  int line = 0;        // 1-based line in the manifest
};

struct Manifest {
  std::vector<ManifestRecord> records;
};

/// CSV `path,label[,landmarks[,source]]`; `#` starts a comment, blank lines
/// are ignored, and a first row starting with `path,` is a header. Relative
/// paths resolve against `base_dir`. Unknown labels, duplicate image paths
/// and (when `check_files`) missing files raise ParseError with the line.
Manifest parse_manifest(const std::string& text, const std::filesystem::path& base_dir, bool check_files = true);
Manifest load_manifest(const std::filesystem::path& path, bool check_files = true);

/// Writes records with paths as given.
std::string format_manifest(const Manifest& manifest);

/// Samples per expression class.
std::vector<int> class_counts(const Manifest& manifest);

}  // namespace fer
