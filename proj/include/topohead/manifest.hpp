#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace topohead::io {

/// One line of a dataset manifest. Records with `pair_of` describe a
/// verification pair and need no tensor directory of their own.
struct SampleRecord {
  std::string id;
  std::filesystem::path tensor_dir;
  std::string label;
  std::optional<std::string> speaker;
  std::optional<std::string> group;
  std::optional<std::pair<std::string, std::string>> pair_of;
  std::optional<double> duration_s;

  bool is_pair() const noexcept { return pair_of.has_value(); }

  friend bool operator==(const SampleRecord&, const SampleRecord&) = default;
};

/// Parses a JSON Lines manifest. Relative tensor_dir values are resolved
/// against the manifest's parent directory. Blank lines are ignored.
std::vector<SampleRecord> read_manifest(const std::filesystem::path& path);

/// Same as read_manifest, reading from a string; `base_dir` resolves
/// relative tensor directories.
std::vector<SampleRecord> parse_manifest(const std::string& text,
                                         const std::filesystem::path& base_dir);

void write_manifest(const std::filesystem::path& path,
                    const std::vector<SampleRecord>& records);

}  // namespace topohead::io
