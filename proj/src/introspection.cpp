#include "topohead/introspection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "topohead/error.hpp"
#include "topohead/metrics.hpp"

namespace topohead::intro {

MeanStd mean_std(std::span<const double> v) {
  if (v.empty()) throw Error(ErrorCode::InvalidArgument, "mean of an empty list");
  MeanStd out;
  for (double x : v) out.mean += x;
  out.mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - out.mean) * (x - out.mean);
  out.std = std::sqrt(ss / static_cast<double>(v.size()));
  return out;
}

double separation_quality(std::span<const double> v1, std::span<const double> v2) {
  if (v1.size() < 2 || v2.size() < 2) {
    throw Error(ErrorCode::InvalidArgument, "separation quality needs >= 2 values per group");
  }
  const auto a = mean_std(v1);
  const auto b = mean_std(v2);
  const double spread = std::max(a.std, b.std);
  if (spread == 0.0) {
    throw Error(ErrorCode::DegenerateDistribution,
                "both groups are constant; separation quality is undefined");
  }
  return std::abs(a.mean - b.mean) / spread;
}

double head_threshold_eer(std::span<const double> values, std::span<const int> labels) {
  std::vector<double> flipped(values.begin(), values.end());
  for (double& v : flipped) v = -v;
  return std::min(clf::eer(values, labels), clf::eer(flipped, labels));
}

std::vector<HeadReport> rank_heads(std::span<const HeadValues> group_a,
                                   std::span<const HeadValues> group_b,
                                   const std::string& feature_name) {
  if (group_a.empty() || group_b.empty()) {
    throw Error(ErrorCode::InvalidArgument, "rank_heads needs two non-empty groups");
  }
  std::vector<double> a(group_a.size()), b(group_b.size());
  std::vector<double> scores(group_a.size() + group_b.size());
  std::vector<int> labels(scores.size(), 0);
  std::fill(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(a.size()), 1);

  std::vector<HeadReport> reports;
  reports.reserve(attn::kHeadCount);
  for (std::size_t flat = 0; flat < attn::kHeadCount; ++flat) {
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = scores[i] = group_a[i][flat];
    for (std::size_t i = 0; i < b.size(); ++i) b[i] = scores[a.size() + i] = group_b[i][flat];
    HeadReport r;
    r.head = attn::HeadIndex::from_flat(flat);
    r.feature_name = feature_name;
    try {
      r.sq = separation_quality(a, b);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DegenerateDistribution) throw;
      r.degenerate = true;
    }
    r.eer_percent = head_threshold_eer(scores, labels);
    reports.push_back(std::move(r));
  }
  std::stable_sort(reports.begin(), reports.end(), [](const HeadReport& x, const HeadReport& y) {
    if (x.sq != y.sq) return x.sq > y.sq;
    return x.head < y.head;
  });
  return reports;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorCode::SizeMismatch, "pearson inputs differ in length");
  if (x.size() < 2) throw Error(ErrorCode::InvalidArgument, "pearson needs >= 2 values");
  const auto mx = mean_std(x);
  const auto my = mean_std(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx.mean;
    const double dy = y[i] - my.mean;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw Error(ErrorCode::DegenerateDistribution, "pearson of a constant input");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

CorrelationGrid correlate_heads(std::span<const HeadValues> features,
                                std::span<const double> mfcc,
                                std::optional<std::span<const double>> plp, double threshold) {
  if (features.size() < 3) {
    throw Error(ErrorCode::InvalidArgument, "correlate_heads needs at least 3 samples");
  }
  if (mfcc.size() != features.size() || (plp && plp->size() != features.size())) {
    throw Error(ErrorCode::SizeMismatch, "acoustic vectors must match the sample count");
  }
  CorrelationGrid grid;
  std::vector<double> column(features.size());
  for (std::size_t flat = 0; flat < attn::kHeadCount; ++flat) {
    for (std::size_t i = 0; i < features.size(); ++i) column[i] = features[i][flat];
    const bool constant =
        std::all_of(column.begin(), column.end(), [&](double v) { return v == column[0]; });
    auto& cell = grid[flat];
    if (constant) continue;
    cell.r_mfcc = pearson(column, mfcc);
    if (plp) cell.r_plp = pearson(column, *plp);
    cell.flagged = *cell.r_mfcc >= threshold || (cell.r_plp && *cell.r_plp >= threshold);
  }
  return grid;
}

namespace {

Composition fractions_of(const std::map<std::string, std::size_t>& counts) {
  std::size_t total = 0;
  for (const auto& [label, c] : counts) total += c;
  Composition out;
  for (const auto& [label, c] : counts) {
    out[label] = static_cast<double>(c) / static_cast<double>(total);
  }
  return out;
}

}  // namespace

ColoredBarcode colored_barcode(const attn::AttentionMap& a, std::span<const std::string> labels,
                               std::span<const double> query_thresholds) {
  const std::size_t n = a.n;
  if (labels.size() != n) {
    throw Error(ErrorCode::SizeMismatch, "got " + std::to_string(labels.size()) +
                                             " phoneme labels for " + std::to_string(n) +
                                             " frames");
  }
  if (!std::is_sorted(query_thresholds.begin(), query_thresholds.end())) {
    throw Error(ErrorCode::InvalidArgument, "query thresholds must be sorted");
  }
  const auto barcode = topo::h0_barcode(attn::sym_adjacency(a));

  ColoredBarcode out;
  out.labels.assign(labels.begin(), labels.end());

  // Indexed by component id (= min vertex). timeline[c] is the bar of c.
  std::vector<std::map<std::string, std::size_t>> counts(n);
  std::vector<ColoredBar> bar_of(n);
  std::vector<char> alive(n, 1);
  for (std::size_t v = 0; v < n; ++v) {
    counts[v][labels[v]] = 1;
    bar_of[v].component = v;
    bar_of[v].timeline.push_back({0.0, fractions_of(counts[v])});
  }

  topo::DisjointSets sets(n);
  std::vector<std::size_t> death_order;
  death_order.reserve(n);
  std::size_t next_merge = 0;
  auto apply_merge = [&](const topo::Merge& m) {
    sets.unite(m.edge.u, m.edge.v);
    for (const auto& [label, c] : counts[m.absorbed]) counts[m.survivor][label] += c;
    counts[m.absorbed].clear();
    alive[m.absorbed] = 0;
    bar_of[m.absorbed].death = m.threshold;
    death_order.push_back(m.absorbed);
    bar_of[m.survivor].timeline.push_back({m.threshold, fractions_of(counts[m.survivor])});
  };

  for (double eps : query_thresholds) {
    while (next_merge < barcode.merges.size() && barcode.merges[next_merge].threshold <= eps) {
      apply_merge(barcode.merges[next_merge++]);
    }
    BarcodeSnapshot snap;
    snap.threshold = eps;
    snap.membership.resize(n);
    for (std::size_t v = 0; v < n; ++v) snap.membership[v] = sets.component_id(v);
    for (std::size_t k = 0; k < next_merge; ++k) snap.edges.push_back(barcode.merges[k].edge);
    out.snapshots.push_back(std::move(snap));
    for (std::size_t c = 0; c < n; ++c) {
      if (alive[c]) bar_of[c].timeline.push_back({eps, fractions_of(counts[c])});
    }
  }
  while (next_merge < barcode.merges.size()) apply_merge(barcode.merges[next_merge++]);

  out.bars.reserve(death_order.size());
  for (std::size_t c : death_order) out.bars.push_back(std::move(bar_of[c]));
  if (n > 0) out.essential = std::move(bar_of[0]);
  return out;
}

nlohmann::json to_json(const HeadReport& r) {
  nlohmann::json j;
  j["layer"] = r.head.layer;
  j["head"] = r.head.head;
  j["feature"] = r.feature_name;
  j["sq"] = r.sq;
  j["degenerate"] = r.degenerate;
  j["eer_percent"] = r.eer_percent ? nlohmann::json(*r.eer_percent) : nlohmann::json();
  if (r.pearson_mfcc) j["pearson_mfcc"] = *r.pearson_mfcc;
  if (r.pearson_plp) j["pearson_plp"] = *r.pearson_plp;
  return j;
}

namespace {

nlohmann::json bar_json(const ColoredBar& bar) {
  nlohmann::json j;
  j["component"] = bar.component;
  j["birth"] = bar.birth;
  j["death"] = bar.death ? nlohmann::json(*bar.death) : nlohmann::json();
  auto& timeline = j["composition"] = nlohmann::json::array();
  for (const auto& p : bar.timeline) {
    timeline.push_back({{"threshold", p.threshold}, {"fractions", p.fractions}});
  }
  return j;
}

}  // namespace

nlohmann::json to_json(const ColoredBarcode& b) {
  nlohmann::json j;
  j["labels"] = b.labels;
  auto& bars = j["bars"] = nlohmann::json::array();
  for (const auto& bar : b.bars) bars.push_back(bar_json(bar));
  j["essential"] = bar_json(b.essential);
  auto& snaps = j["snapshots"] = nlohmann::json::array();
  for (const auto& s : b.snapshots) {
    nlohmann::json edges = nlohmann::json::array();
    for (const auto& e : s.edges) edges.push_back({e.u, e.v, e.weight});
    snaps.push_back({{"threshold", s.threshold}, {"membership", s.membership}, {"edges", edges}});
  }
  return j;
}

}  // namespace topohead::intro
