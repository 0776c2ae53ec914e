#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace topohead {

using FeatureNames = std::shared_ptr<const std::vector<std::string>>;

/// Flat feature vector tied to a canonical column ordering.
struct FeatureVector {
  FeatureNames names;
  std::vector<double> values;
};

struct FeatureRow {
  std::string id;
  std::string label;
  std::string speaker;
  std::string group;
  std::vector<double> values;
};

/// In-memory image of a features CSV:
///   id,label,speaker,group,<feature names...>
struct FeatureTable {
  std::vector<std::string> names;
  std::vector<FeatureRow> rows;

  /// Index of a feature column; throws if absent.
  std::size_t column(const std::string& name) const;
  void sort_by_id();
};

inline constexpr const char* kMetaColumns[] = {"id", "label", "speaker", "group"};

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

std::string render_feature_csv(const FeatureTable& table);
FeatureTable parse_feature_csv(const std::string& text);

void write_feature_csv(const std::filesystem::path& path, const FeatureTable& table);
FeatureTable read_feature_csv(const std::filesystem::path& path);

/// Writes `text` to `path` via a sibling temporary file and rename.
void write_text_atomic(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace topohead
