#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include "topohead/cli.hpp"
#include "topohead/error.hpp"

namespace topohead::cli {

const char* to_string(FeatureSet f) {
  switch (f) {
    case FeatureSet::Attention: return "attention";
    case FeatureSet::AttentionPlusEmbedding: return "attention_plus_embedding";
    case FeatureSet::PooledFirst: return "pooled_first";
    case FeatureSet::PooledMean: return "pooled_mean";
  }
  return "?";
}

const char* to_string(Task t) {
  switch (t) {
    case Task::Classify: return "classify";
    case Task::Verify: return "verify";
    case Task::RankHeads: return "rank_heads";
    case Task::Correlate: return "correlate";
    case Task::BarcodeExport: return "barcode_export";
  }
  return "?";
}

FeatureSet parse_feature_set(const std::string& s) {
  for (auto f : {FeatureSet::Attention, FeatureSet::AttentionPlusEmbedding,
                 FeatureSet::PooledFirst, FeatureSet::PooledMean}) {
    if (s == to_string(f)) return f;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown feature set '" + s + "'");
}

Task parse_task(const std::string& s) {
  for (auto t : {Task::Classify, Task::Verify, Task::RankHeads, Task::Correlate,
                 Task::BarcodeExport}) {
    if (s == to_string(t)) return t;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown task '" + s + "'");
}

void apply_config_json(RunConfig& c, const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, "config must be a JSON object");
  static const std::set<std::string> known{
      "manifest_path", "output_dir",    "features_path", "train_path",        "dev_path",
      "test_path",     "feature_set",   "task",          "lambda_grid",       "seed",
      "workers",       "subsample_cap", "group_a",       "group_b",           "head_feature",
      "max_per_group", "thresholds",    "head",          "pearson_threshold", "positive_label",
      "max_iter",      "tol"};
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw Error(ErrorCode::InvalidArgument, "unknown config key '" + key + "'");
  }
  auto path = [&](const char* key, std::filesystem::path& out) {
    if (j.contains(key)) out = j.at(key).get<std::string>();
  };
  path("manifest_path", c.manifest_path);
  path("output_dir", c.output_dir);
  path("features_path", c.features_path);
  path("train_path", c.train_path);
  path("dev_path", c.dev_path);
  path("test_path", c.test_path);
  if (j.contains("feature_set")) c.feature_set = parse_feature_set(j.at("feature_set"));
  if (j.contains("task")) c.task = parse_task(j.at("task"));
  if (j.contains("lambda_grid")) c.lambda_grid = j.at("lambda_grid").get<std::vector<double>>();
  if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("workers")) c.workers = j.at("workers").get<std::size_t>();
  if (j.contains("subsample_cap")) c.subsample_cap = j.at("subsample_cap").get<std::size_t>();
  if (j.contains("group_a")) c.group_a = j.at("group_a").get<std::string>();
  if (j.contains("group_b")) c.group_b = j.at("group_b").get<std::string>();
  if (j.contains("head_feature")) c.head_feature = j.at("head_feature").get<std::string>();
  if (j.contains("max_per_group")) c.max_per_group = j.at("max_per_group").get<std::size_t>();
  if (j.contains("pearson_threshold")) c.pearson_threshold = j.at("pearson_threshold").get<double>();
  if (j.contains("thresholds")) c.thresholds = j.at("thresholds").get<std::vector<double>>();
  if (j.contains("head")) c.head = j.at("head").get<std::string>();
  if (j.contains("positive_label")) c.positive_label = j.at("positive_label").get<std::string>();
  if (j.contains("max_iter")) c.max_iter = j.at("max_iter").get<std::size_t>();
  if (j.contains("tol")) c.tol = j.at("tol").get<double>();
}

}  // namespace topohead::cli
