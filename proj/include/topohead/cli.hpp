#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace topohead::cli {

enum class FeatureSet { Attention, AttentionPlusEmbedding, PooledFirst, PooledMean };
enum class Task { Classify, Verify, RankHeads, Correlate, BarcodeExport };

const char* to_string(FeatureSet f);
const char* to_string(Task t);
FeatureSet parse_feature_set(const std::string& s);
Task parse_task(const std::string& s);

struct RunConfig {
  std::filesystem::path manifest_path;
  std::filesystem::path output_dir = ".";
  FeatureSet feature_set = FeatureSet::Attention;
  Task task = Task::Classify;
  std::vector<double> lambda_grid{1e-4, 1e-3, 1e-2, 1e-1, 1.0};
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  std::size_t subsample_cap = 1500;

  // rank-heads
  std::string group_a;
  std::string group_b;
  std::string head_feature = "h0m_sym";
  std::size_t max_per_group = 0;  // 0 = unlimited
  std::filesystem::path features_path;

  // correlate
  double pearson_threshold = 0.5;

  // barcode-export
  std::vector<double> thresholds;
  std::string head;  // "L,H"

  // train-eval
  std::filesystem::path train_path;
  std::filesystem::path dev_path;
  std::filesystem::path test_path;
  std::string positive_label;
  std::size_t max_iter = 5000;
  double tol = 1e-10;
};

/// Overlays keys present in `j` (named after RunConfig fields) onto `config`.
void apply_config_json(RunConfig& config, const nlohmann::json& j);

/// Entry point shared by the executable and the tests. `args` excludes argv[0].
/// Returns 0 on success, 1 on usage errors, 2 on failures, 3 when some
/// samples were skipped.
int run(const std::vector<std::string>& args);

}  // namespace topohead::cli
