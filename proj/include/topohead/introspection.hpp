#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "topohead/attention_features.hpp"
#include "topohead/topology.hpp"

namespace topohead::intro {

/// One scalar per head, indexed by HeadIndex::flat().
using HeadValues = std::array<double, attn::kHeadCount>;

struct HeadReport {
  attn::HeadIndex head;
  std::string feature_name;
  double sq = 0.0;
  bool degenerate = false;  // both groups constant: SQ undefined, reported as 0
  std::optional<double> eer_percent;
  std::optional<double> pearson_mfcc;
  std::optional<double> pearson_plp;
};

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population
};
MeanStd mean_std(std::span<const double> v);

/// |m1 - m2| / max(s1, s2) with population standard deviations.
double separation_quality(std::span<const double> v1, std::span<const double> v2);

/// Smaller EER of the two score orientations; never above 50.
double head_threshold_eer(std::span<const double> values, std::span<const int> labels);

/// All 144 heads, SQ descending, ties by (layer, head). Group A is the
/// positive class for the per-head threshold EER.
std::vector<HeadReport> rank_heads(std::span<const HeadValues> group_a,
                                   std::span<const HeadValues> group_b,
                                   const std::string& feature_name);

double pearson(std::span<const double> x, std::span<const double> y);

struct CorrelationCell {
  std::optional<double> r_mfcc;  // empty when the head's feature is constant
  std::optional<double> r_plp;
  bool flagged = false;
};

using CorrelationGrid = std::array<CorrelationCell, attn::kHeadCount>;

/// Pearson r of each head's feature against per-sample acoustic scalars.
/// A head is flagged when either r is >= threshold.
CorrelationGrid correlate_heads(std::span<const HeadValues> features,
                                std::span<const double> mfcc,
                                std::optional<std::span<const double>> plp,
                                double threshold = 0.5);

using Composition = std::map<std::string, double>;

struct CompositionPoint {
  double threshold = 0.0;
  Composition fractions;
};

struct ColoredBar {
  std::size_t component = 0;  // min vertex id of the component the bar tracks
  double birth = 0.0;
  std::optional<double> death;  // empty for the essential bar
  std::vector<CompositionPoint> timeline;
};

struct BarcodeSnapshot {
  double threshold = 0.0;
  std::vector<std::size_t> membership;  // per vertex component id
  std::vector<topo::Edge> edges;        // MST edges with weight <= threshold
};

struct ColoredBarcode {
  std::vector<std::string> labels;
  std::vector<ColoredBar> bars;  // finite bars, death ascending
  ColoredBar essential;
  std::vector<BarcodeSnapshot> snapshots;
};

/// Phoneme composition of every H0 component of the symmetrized attention
/// graph. Timelines are sampled at birth, at each merge that grows the
/// component and at every query threshold below its death.
ColoredBarcode colored_barcode(const attn::AttentionMap& a,
                               std::span<const std::string> labels,
                               std::span<const double> query_thresholds);

nlohmann::json to_json(const HeadReport& r);
nlohmann::json to_json(const ColoredBarcode& b);

}  // namespace topohead::intro
