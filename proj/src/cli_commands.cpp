#include <algorithm>
#include <atomic>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "topohead/attention_features.hpp"
#include "topohead/bundle.hpp"
#include "topohead/classifier.hpp"
#include "topohead/cli.hpp"
#include "topohead/embedding_features.hpp"
#include "topohead/error.hpp"
#include "topohead/feature_table.hpp"
#include "topohead/introspection.hpp"
#include "topohead/manifest.hpp"
#include "topohead/metrics.hpp"
#include "topohead/synthetic.hpp"

namespace topohead::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr int kExitUsage = 1;
constexpr int kExitFailure = 2;
constexpr int kExitPartial = 3;

void log(const std::string& msg) { std::cerr << "topohead: " << msg << '\n'; }

/// Runs body(i) for i in [0, count) on up to `workers` threads. `body` must not throw.
template <class Body>
void parallel_for(std::size_t count, std::size_t workers, Body&& body) {
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(count, 1));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) body(i);
    });
  }
}

std::vector<double> parse_number_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size()) {
      throw Error(ErrorCode::InvalidArgument, "bad number '" + item + "' in list");
    }
    out.push_back(v);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Feature extraction

FeatureNames names_for(FeatureSet set) {
  static const auto build = [](FeatureSet s) {
    std::vector<std::string> names;
    switch (s) {
      case FeatureSet::Attention:
        names = attn::attention_feature_names();
        break;
      case FeatureSet::AttentionPlusEmbedding:
        names = attn::attention_feature_names();
        names.insert(names.end(), emb::embedding_feature_names().begin(),
                     emb::embedding_feature_names().end());
        break;
      case FeatureSet::PooledFirst:
        names = emb::pooled_feature_names(emb::Pooling::First);
        break;
      case FeatureSet::PooledMean:
        names = emb::pooled_feature_names(emb::Pooling::Mean);
        break;
    }
    return std::make_shared<const std::vector<std::string>>(std::move(names));
  };
  static const std::map<FeatureSet, FeatureNames> cache = {
      {FeatureSet::Attention, build(FeatureSet::Attention)},
      {FeatureSet::AttentionPlusEmbedding, build(FeatureSet::AttentionPlusEmbedding)},
      {FeatureSet::PooledFirst, build(FeatureSet::PooledFirst)},
      {FeatureSet::PooledMean, build(FeatureSet::PooledMean)},
  };
  return cache.at(set);
}

struct UtteranceFeatures {
  FeatureVector features;
  json meta;
};

UtteranceFeatures compute_features(const io::SampleRecord& record, FeatureSet set,
                                   std::size_t frame_cap) {
  const auto bundle = io::load_sample_bundle(record);
  UtteranceFeatures out;
  out.features.names = names_for(set);
  out.meta["frames"] = bundle.frames();
  out.meta["mfcc_frames"] = bundle.mfcc.dim(0);
  auto& values = out.features.values;
  switch (set) {
    case FeatureSet::Attention:
      values = attn::attention_feature_block(bundle.attention).values;
      break;
    case FeatureSet::AttentionPlusEmbedding: {
      values = attn::attention_feature_block(bundle.attention).values;
      const auto block = emb::embedding_feature_block(bundle, frame_cap);
      const auto tail = block.values();
      values.insert(values.end(), tail.begin(), tail.end());
      out.meta["frame_stride"] = block.frame_stride;
      out.meta["mfcc_stride"] = block.mfcc_stride;
      break;
    }
    case FeatureSet::PooledFirst:
      values = emb::pooled_baseline(bundle, emb::Pooling::First);
      break;
    case FeatureSet::PooledMean:
      values = emb::pooled_baseline(bundle, emb::Pooling::Mean);
      break;
  }
  return out;
}

std::vector<io::SampleRecord> utterances_of(const std::vector<io::SampleRecord>& records) {
  std::vector<io::SampleRecord> out;
  for (const auto& r : records) {
    if (!r.is_pair()) out.push_back(r);
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  return out;
}

/// Loads every utterance in parallel; failures are logged and left empty.
template <class Result, class Fn>
std::vector<std::optional<Result>> map_samples(const std::vector<io::SampleRecord>& recs,
                                               std::size_t workers, Fn&& fn,
                                               std::vector<std::string>& failed) {
  std::vector<std::optional<Result>> results(recs.size());
  std::vector<std::string> errors(recs.size());
  parallel_for(recs.size(), workers, [&](std::size_t i) {
    try {
      results[i] = fn(recs[i]);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });
  for (std::size_t i = 0; i < recs.size(); ++i) {
    if (!results[i]) {
      log("skipping sample '" + recs[i].id + "': " + errors[i]);
      failed.push_back(recs[i].id);
    }
  }
  return results;
}

FeatureRow make_row(const io::SampleRecord& r, std::vector<double> values) {
  return FeatureRow{r.id, r.label, r.speaker.value_or(""), r.group.value_or(""),
                    std::move(values)};
}

int cmd_extract(const RunConfig& c) {
  if (c.task != Task::Classify && c.task != Task::Verify) {
    throw Error(ErrorCode::InvalidArgument, "extract supports --task classify or verify");
  }
  const auto records = io::read_manifest(c.manifest_path);
  fs::create_directories(c.output_dir);
  const auto csv_path = c.output_dir / "features.csv";
  const auto meta_path = c.output_dir / "features.meta.json";
  const auto names = names_for(c.feature_set);
  const bool verify = c.task == Task::Verify;

  std::map<std::string, const io::SampleRecord*> by_id;
  for (const auto& r : records) by_id[r.id] = &r;
  std::vector<const io::SampleRecord*> targets;
  for (const auto& [id, r] : by_id) {
    if (r->is_pair() == verify) targets.push_back(r);
  }

  // Resume: reuse rows of a previous run with the same columns.
  std::map<std::string, FeatureRow> done;
  json sample_meta = json::object();
  if (fs::exists(csv_path)) {
    auto previous = read_feature_csv(csv_path);
    if (previous.names == *names) {
      for (auto& row : previous.rows) {
        if (by_id.contains(row.id) && by_id[row.id]->is_pair() == verify) {
          done.emplace(row.id, std::move(row));
        }
      }
      if (fs::exists(meta_path)) {
        const auto old = json::parse(read_text(meta_path));
        if (old.contains("samples")) sample_meta = old.at("samples");
      }
    } else {
      log("existing " + csv_path.string() + " has different columns; recomputing");
    }
  }

  std::set<std::string> needed_ids;
  for (const auto* r : targets) {
    if (done.contains(r->id)) continue;
    if (verify) {
      needed_ids.insert(r->pair_of->first);
      needed_ids.insert(r->pair_of->second);
    } else {
      needed_ids.insert(r->id);
    }
  }
  std::vector<io::SampleRecord> needed;
  for (const auto& id : needed_ids) {
    if (by_id.at(id)->is_pair()) {
      throw Error(ErrorCode::InvalidArgument, "pair member '" + id + "' is itself a pair");
    }
    needed.push_back(*by_id.at(id));
  }

  std::vector<std::string> failed;
  const auto results = map_samples<UtteranceFeatures>(
      needed, c.workers,
      [&](const io::SampleRecord& r) { return compute_features(r, c.feature_set, c.subsample_cap); },
      failed);
  std::map<std::string, const UtteranceFeatures*> computed;
  for (std::size_t i = 0; i < needed.size(); ++i) {
    if (results[i]) {
      computed[needed[i].id] = &*results[i];
      sample_meta[needed[i].id] = results[i]->meta;
    }
  }

  FeatureTable table;
  table.names = *names;
  std::size_t reused = 0;
  for (const auto* r : targets) {
    if (auto it = done.find(r->id); it != done.end()) {
      table.rows.push_back(std::move(it->second));
      ++reused;
      continue;
    }
    if (!verify) {
      if (auto it = computed.find(r->id); it != computed.end()) {
        table.rows.push_back(make_row(*r, it->second->features.values));
      }
      continue;
    }
    auto a = computed.find(r->pair_of->first);
    auto b = computed.find(r->pair_of->second);
    if (a == computed.end() || b == computed.end()) {
      log("skipping pair '" + r->id + "': a member failed to load");
      failed.push_back(r->id);
      continue;
    }
    table.rows.push_back(
        make_row(*r, clf::pair_difference(a->second->features, b->second->features).values));
  }
  table.sort_by_id();
  write_feature_csv(csv_path, table);

  std::sort(failed.begin(), failed.end());
  json meta;
  meta["feature_set"] = to_string(c.feature_set);
  meta["task"] = to_string(c.task);
  meta["n_features"] = names->size();
  meta["subsample_cap"] = c.subsample_cap;
  meta["rows"] = table.rows.size();
  meta["samples"] = sample_meta;
  meta["failed"] = failed;
  write_text_atomic(meta_path, meta.dump(2) + "\n");

  log("extract: wrote " + std::to_string(table.rows.size()) + " rows (" +
      std::to_string(reused) + " reused), " + std::to_string(failed.size()) + " failed");
  return failed.empty() ? 0 : kExitPartial;
}

// ---------------------------------------------------------------------------
// Training and evaluation

struct Split {
  clf::Matrix x;
  std::vector<std::string> labels;
};

Split to_split(const FeatureTable& t) {
  Split s;
  s.x = clf::Matrix(t.rows.size(), t.names.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    std::copy(t.rows[i].values.begin(), t.rows[i].values.end(),
              s.x.data.begin() + static_cast<std::ptrdiff_t>(i * t.names.size()));
    s.labels.push_back(t.rows[i].label);
  }
  return s;
}

struct Scores {
  double accuracy = 0.0;
  std::optional<double> eer;
};

Scores evaluate(const clf::LinearModel& model, const Split& split,
                const std::optional<std::size_t>& positive) {
  Scores s;
  s.accuracy = clf::accuracy(split.labels, clf::predict(model, split.x));
  if (positive) {
    const auto proba = clf::predict_proba(model, split.x);
    std::vector<double> scores(split.x.rows);
    std::vector<int> is_pos(split.x.rows);
    for (std::size_t i = 0; i < split.x.rows; ++i) {
      scores[i] = proba(i, *positive);
      is_pos[i] = split.labels[i] == model.classes[*positive];
    }
    s.eer = clf::eer(scores, is_pos);
  }
  return s;
}

int cmd_train_eval(const RunConfig& c) {
  if (c.task != Task::Classify && c.task != Task::Verify) {
    throw Error(ErrorCode::InvalidArgument, "train-eval supports --task classify or verify");
  }
  if (c.train_path.empty() || c.test_path.empty()) {
    throw Error(ErrorCode::InvalidArgument, "train-eval needs --train and --test");
  }
  if (c.lambda_grid.empty()) throw Error(ErrorCode::InvalidArgument, "empty lambda grid");
  const auto train_t = read_feature_csv(c.train_path);
  const auto test_t = read_feature_csv(c.test_path);
  std::optional<FeatureTable> dev_t;
  if (!c.dev_path.empty()) dev_t = read_feature_csv(c.dev_path);
  if (!dev_t && c.lambda_grid.size() > 1) {
    throw Error(ErrorCode::InvalidArgument, "lambda selection over a grid needs --dev");
  }
  if (test_t.names != train_t.names || (dev_t && dev_t->names != train_t.names)) {
    throw Error(ErrorCode::SizeMismatch, "train/dev/test feature columns differ");
  }

  const auto train = to_split(train_t);
  const auto test = to_split(test_t);
  const auto dev = dev_t ? std::optional<Split>(to_split(*dev_t)) : std::nullopt;
  const auto standardizer = clf::fit_standardizer(train.x);
  const auto train_z = standardizer.apply(train.x);

  const bool verify = c.task == Task::Verify;
  auto fit = [&](double lambda) {
    clf::TrainOptions opts{lambda, c.seed, c.max_iter, c.tol};
    auto model = clf::train_l1_logreg(train_z, train.labels, opts);
    model.standardizer = standardizer;
    return model;
  };
  auto positive_index = [&](const clf::LinearModel& m) -> std::optional<std::size_t> {
    if (!verify) return std::nullopt;
    if (m.classes.size() != 2) {
      throw Error(ErrorCode::InvalidArgument, "verify task needs exactly two classes");
    }
    if (c.positive_label.empty()) return 1;
    auto it = std::find(m.classes.begin(), m.classes.end(), c.positive_label);
    if (it == m.classes.end()) {
      throw Error(ErrorCode::InvalidArgument, "positive label '" + c.positive_label + "' unseen");
    }
    return static_cast<std::size_t>(it - m.classes.begin());
  };

  json dev_scores = json::array();
  std::optional<clf::LinearModel> best;
  double best_metric = 0.0;
  for (double lambda : c.lambda_grid) {
    auto model = fit(lambda);
    if (!dev) {
      best = std::move(model);
      break;
    }
    const auto s = evaluate(model, *dev, positive_index(model));
    // Higher is better; EER is negated. Ties go to the larger lambda.
    const double metric = verify ? -*s.eer : s.accuracy;
    json entry{{"lambda", lambda}, {"accuracy", s.accuracy}};
    if (s.eer) entry["eer"] = *s.eer;
    dev_scores.push_back(entry);
    if (!best || metric > best_metric || (metric == best_metric && lambda > best->lambda)) {
      best = std::move(model);
      best_metric = metric;
    }
  }

  const auto test_scores = evaluate(*best, test, positive_index(*best));
  json metrics;
  metrics["task"] = to_string(c.task);
  metrics["n_features"] = train_t.names.size();
  metrics["splits"] = {{"train", train.x.rows}, {"dev", dev ? dev->x.rows : 0},
                       {"test", test.x.rows}};
  metrics["lambda_grid"] = c.lambda_grid;
  metrics["dev"] = dev_scores;
  metrics["chosen_lambda"] = best->lambda;
  metrics["seed"] = c.seed;
  metrics["classes"] = best->classes;
  metrics["converged"] = best->converged;
  metrics["n_iter"] = best->n_iter;
  metrics["nonzero_weights"] = best->weights.data.size() - best->zero_weight_count();
  metrics["test"] = {{"accuracy", test_scores.accuracy}};
  if (test_scores.eer) {
    metrics["test"]["eer"] = *test_scores.eer;
    metrics["positive_label"] = best->classes[*positive_index(*best)];
  }

  fs::create_directories(c.output_dir);
  write_text_atomic(c.output_dir / "metrics.json", metrics.dump(2) + "\n");
  write_text_atomic(c.output_dir / "model.json", clf::to_json(*best).dump() + "\n");
  log("train-eval: lambda=" + format_double(best->lambda) +
      " test accuracy=" + format_double(test_scores.accuracy) +
      (test_scores.eer ? " eer=" + format_double(*test_scores.eer) : ""));
  return 0;
}

// ---------------------------------------------------------------------------
// Head analyses

struct GroupSelector {
  std::string field;
  std::set<std::string> values;
  std::string text;

  static GroupSelector parse(const std::string& text) {
    const auto eq = text.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::InvalidArgument,
                  "group selector must look like field=value[,value...]: '" + text + "'");
    }
    GroupSelector g;
    g.text = text;
    g.field = text.substr(0, eq);
    if (g.field != "label" && g.field != "speaker" && g.field != "group" && g.field != "id") {
      throw Error(ErrorCode::InvalidArgument, "group field must be label, speaker, group or id");
    }
    std::stringstream in(text.substr(eq + 1));
    std::string v;
    while (std::getline(in, v, ',')) g.values.insert(v);
    if (g.values.empty()) throw Error(ErrorCode::InvalidArgument, "empty group selector");
    return g;
  }

  bool matches(const FeatureRow& r) const {
    const std::string& v = field == "label"     ? r.label
                           : field == "speaker" ? r.speaker
                           : field == "group"   ? r.group
                                                : r.id;
    return values.contains(v);
  }
};

struct HeadSample {
  FeatureRow meta;  // values unused
  intro::HeadValues values;
};

std::vector<HeadSample> head_samples_from_csv(const fs::path& path, const std::string& suffix) {
  const auto table = read_feature_csv(path);
  std::array<std::size_t, attn::kHeadCount> cols{};
  for (std::size_t flat = 0; flat < attn::kHeadCount; ++flat) {
    cols[flat] = table.column(attn::HeadIndex::from_flat(flat).tag() + "_" + suffix);
  }
  std::vector<HeadSample> out;
  for (const auto& row : table.rows) {
    HeadSample s{FeatureRow{row.id, row.label, row.speaker, row.group, {}}, {}};
    for (std::size_t flat = 0; flat < attn::kHeadCount; ++flat) s.values[flat] = row.values[cols[flat]];
    out.push_back(std::move(s));
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.meta.id < b.meta.id; });
  return out;
}

std::vector<HeadSample> head_samples_from_manifest(const RunConfig& c, attn::HeadFeature kind,
                                                   std::vector<std::string>& failed) {
  const auto recs = utterances_of(io::read_manifest(c.manifest_path));
  const auto grids = map_samples<intro::HeadValues>(
      recs, c.workers,
      [&](const io::SampleRecord& r) {
        return attn::head_feature_grid(io::load_sample_bundle(r).attention, kind);
      },
      failed);
  std::vector<HeadSample> out;
  for (std::size_t i = 0; i < recs.size(); ++i) {
    if (grids[i]) out.push_back(HeadSample{make_row(recs[i], {}), *grids[i]});
  }
  return out;
}

void write_rank_csv(const fs::path& path, const std::vector<intro::HeadReport>& reports) {
  std::string out = "rank,layer,head,feature,sq,eer_percent,degenerate\n";
  for (std::size_t k = 0; k < reports.size(); ++k) {
    const auto& r = reports[k];
    out += std::to_string(k + 1) + "," + std::to_string(r.head.layer) + "," +
           std::to_string(r.head.head) + "," + r.feature_name + "," + format_double(r.sq) + "," +
           (r.eer_percent ? format_double(*r.eer_percent) : "") + "," +
           (r.degenerate ? "1" : "0") + "\n";
  }
  write_text_atomic(path, out);
}

int cmd_rank_heads(const RunConfig& c) {
  if (c.task != Task::RankHeads) {
    throw Error(ErrorCode::InvalidArgument, "rank-heads runs the rank_heads task only");
  }
  if (c.group_a.empty() || c.group_b.empty()) {
    throw Error(ErrorCode::InvalidArgument, "rank-heads needs --group-a and --group-b");
  }
  const auto sel_a = GroupSelector::parse(c.group_a);
  const auto sel_b = GroupSelector::parse(c.group_b);
  const std::string feature = c.head_feature.empty() ? "h0m_sym" : c.head_feature;
  const auto kind = attn::parse_head_feature(feature);

  std::vector<std::string> failed;
  std::vector<HeadSample> samples;
  if (!c.features_path.empty()) {
    samples = head_samples_from_csv(c.features_path, feature);
  } else if (!c.manifest_path.empty()) {
    samples = head_samples_from_manifest(c, kind, failed);
  } else {
    throw Error(ErrorCode::InvalidArgument, "rank-heads needs --features or --manifest");
  }

  std::vector<intro::HeadValues> a, b;
  for (const auto& s : samples) {
    const bool in_a = sel_a.matches(s.meta), in_b = sel_b.matches(s.meta);
    if (in_a && in_b) {
      throw Error(ErrorCode::InvalidArgument, "sample '" + s.meta.id + "' matches both groups");
    }
    if (in_a && (c.max_per_group == 0 || a.size() < c.max_per_group)) a.push_back(s.values);
    if (in_b && (c.max_per_group == 0 || b.size() < c.max_per_group)) b.push_back(s.values);
  }
  const auto reports = intro::rank_heads(a, b, feature);

  json j;
  j["feature"] = feature;
  j["group_a"] = sel_a.text;
  j["group_b"] = sel_b.text;
  j["n_a"] = a.size();
  j["n_b"] = b.size();
  j["heads"] = json::array();
  for (const auto& r : reports) j["heads"].push_back(intro::to_json(r));
  fs::create_directories(c.output_dir);
  write_text_atomic(c.output_dir / "rank_heads.json", j.dump(2) + "\n");
  write_rank_csv(c.output_dir / "rank_heads.csv", reports);
  log("rank-heads: best head " + reports.front().head.tag() +
      " sq=" + format_double(reports.front().sq));
  return failed.empty() ? 0 : kExitPartial;
}

double grand_mean(const io::Tensor& t) {
  double sum = 0.0;
  for (float v : t.data) sum += v;
  return sum / static_cast<double>(t.data.size());
}

void write_grid_csv(const fs::path& path, const intro::CorrelationGrid& grid, bool plp) {
  std::string out = "layer";
  for (std::size_t h = 0; h < io::kHeads; ++h) out += ",H" + std::string(h < 10 ? "0" : "") + std::to_string(h);
  out += '\n';
  for (std::size_t l = 0; l < io::kLayers; ++l) {
    out += std::to_string(l);
    for (std::size_t h = 0; h < io::kHeads; ++h) {
      const auto& cell = grid[attn::HeadIndex{l, h}.flat()];
      const auto& r = plp ? cell.r_plp : cell.r_mfcc;
      out += "," + (r ? format_double(*r) : std::string());
    }
    out += '\n';
  }
  write_text_atomic(path, out);
}

int cmd_correlate(const RunConfig& c) {
  if (c.task != Task::Correlate) {
    throw Error(ErrorCode::InvalidArgument, "correlate runs the correlate task only");
  }
  const std::string feature = c.head_feature.empty() ? "h0m_pc" : c.head_feature;
  const auto kind = attn::parse_head_feature(feature);
  const auto recs = utterances_of(io::read_manifest(c.manifest_path));

  struct Row {
    intro::HeadValues values;
    double mfcc;
    std::optional<double> plp;
  };
  std::vector<std::string> failed;
  const auto rows = map_samples<Row>(
      recs, c.workers,
      [&](const io::SampleRecord& r) {
        const auto b = io::load_sample_bundle(r);
        return Row{attn::head_feature_grid(b.attention, kind), grand_mean(b.mfcc),
                   b.plp ? std::optional<double>(grand_mean(*b.plp)) : std::nullopt};
      },
      failed);

  std::vector<intro::HeadValues> values;
  std::vector<double> mfcc, plp;
  bool all_plp = true;
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < recs.size(); ++i) {
    if (!rows[i]) continue;
    ids.push_back(recs[i].id);
    values.push_back(rows[i]->values);
    mfcc.push_back(rows[i]->mfcc);
    all_plp = all_plp && rows[i]->plp.has_value();
    plp.push_back(rows[i]->plp.value_or(0.0));
  }
  const auto grid = intro::correlate_heads(
      values, mfcc, all_plp ? std::optional<std::span<const double>>(plp) : std::nullopt,
      c.pearson_threshold);

  json j;
  j["feature"] = feature;
  j["threshold"] = c.pearson_threshold;
  j["n_samples"] = values.size();
  j["acoustic_summary"] = "grand mean over frames and coefficients";
  j["heads"] = json::array();
  j["flagged"] = json::array();
  for (std::size_t flat = 0; flat < attn::kHeadCount; ++flat) {
    const auto head = attn::HeadIndex::from_flat(flat);
    const auto& cell = grid[flat];
    json h{{"layer", head.layer}, {"head", head.head}, {"flagged", cell.flagged}};
    h["r_mfcc"] = cell.r_mfcc ? json(*cell.r_mfcc) : json();
    h["r_plp"] = cell.r_plp ? json(*cell.r_plp) : json();
    j["heads"].push_back(h);
    if (cell.flagged) j["flagged"].push_back(head.tag());
  }
  fs::create_directories(c.output_dir);
  write_text_atomic(c.output_dir / "correlation.json", j.dump(2) + "\n");
  write_grid_csv(c.output_dir / "correlation_mfcc.csv", grid, false);
  if (all_plp) write_grid_csv(c.output_dir / "correlation_plp.csv", grid, true);
  log("correlate: " + std::to_string(j["flagged"].size()) + " heads flagged");
  return failed.empty() ? 0 : kExitPartial;
}

attn::HeadIndex parse_head(const std::string& text) {
  const auto values = parse_number_list(text);
  if (values.size() != 2) throw Error(ErrorCode::InvalidArgument, "--head expects LAYER,HEAD");
  const auto layer = static_cast<std::size_t>(values[0]);
  const auto head = static_cast<std::size_t>(values[1]);
  if (values[0] < 0 || values[1] < 0 || layer >= io::kLayers || head >= io::kHeads ||
      static_cast<double>(layer) != values[0] || static_cast<double>(head) != values[1]) {
    throw Error(ErrorCode::OutOfRange, "--head must be two integers in [0,11]");
  }
  return {layer, head};
}

int cmd_barcode_export(const RunConfig& c) {
  if (c.task != Task::BarcodeExport) {
    throw Error(ErrorCode::InvalidArgument, "barcode-export runs the barcode_export task only");
  }
  if (c.head.empty()) throw Error(ErrorCode::InvalidArgument, "barcode-export needs --head L,H");
  const auto head = parse_head(c.head);
  if (!std::is_sorted(c.thresholds.begin(), c.thresholds.end())) {
    throw Error(ErrorCode::InvalidArgument, "--thresholds must be sorted");
  }
  const auto recs = utterances_of(io::read_manifest(c.manifest_path));
  const auto dir = c.output_dir / "barcodes";
  fs::create_directories(dir);

  std::vector<std::string> failed;
  const auto files = map_samples<std::string>(
      recs, c.workers,
      [&](const io::SampleRecord& r) {
        const auto b = io::load_sample_bundle(r);
        if (!b.phoneme_labels) throw Error(ErrorCode::MissingFile, "no phones.txt");
        const std::size_t n = b.frames();
        const attn::AttentionMap a(b.head(head.layer, head.head), n);
        auto j = intro::to_json(intro::colored_barcode(a, *b.phoneme_labels, c.thresholds));
        j["id"] = r.id;
        j["layer"] = head.layer;
        j["head"] = head.head;
        const std::string name = r.id + "_" + head.tag() + ".json";
        write_text_atomic(dir / name, j.dump(1) + "\n");
        return name;
      },
      failed);
  json index = json::array();
  for (const auto& f : files) {
    if (f) index.push_back(*f);
  }
  write_text_atomic(dir / "index.json", index.dump(2) + "\n");
  log("barcode-export: wrote " + std::to_string(index.size()) + " barcodes");
  return failed.empty() ? 0 : kExitPartial;
}

// ---------------------------------------------------------------------------
// Argument handling

/// Collects option -> RunConfig setters that fire only for flags actually given,
/// so that explicit flags override values loaded from --config.
class Overrides {
 public:
  template <class T, class Apply>
  CLI::Option* add(CLI::App* app, const std::string& name, const std::string& desc,
                   Apply apply) {
    auto holder = std::make_shared<T>();
    CLI::Option* opt = app->add_option(name, *holder, desc);
    setters_.push_back([opt, holder, apply](RunConfig& c) {
      if (opt->count() > 0) apply(c, *holder);
    });
    return opt;
  }

  void apply(RunConfig& c) const {
    for (const auto& s : setters_) s(c);
  }

 private:
  std::vector<std::function<void(RunConfig&)>> setters_;
};

void add_common(CLI::App* app, Overrides& o, std::string& config_path) {
  app->add_option("--config", config_path, "JSON file mirroring the run configuration");
  o.add<std::string>(app, "--manifest", "JSON Lines dataset manifest",
                     [](RunConfig& c, const std::string& v) { c.manifest_path = v; });
  o.add<std::string>(app, "--out", "output directory",
                     [](RunConfig& c, const std::string& v) { c.output_dir = v; });
  o.add<std::string>(app, "--feature-set",
                     "attention | attention_plus_embedding | pooled_first | pooled_mean",
                     [](RunConfig& c, const std::string& v) { c.feature_set = parse_feature_set(v); });
  o.add<std::string>(app, "--task", "classify | verify | rank_heads | correlate | barcode_export",
                     [](RunConfig& c, const std::string& v) { c.task = parse_task(v); });
  o.add<std::string>(app, "--lambda-grid", "comma-separated L1 strengths",
                     [](RunConfig& c, const std::string& v) { c.lambda_grid = parse_number_list(v); });
  o.add<std::uint64_t>(app, "--seed", "seed recorded with every model",
                       [](RunConfig& c, std::uint64_t v) { c.seed = v; });
  o.add<std::size_t>(app, "--workers", "sample-parallel worker threads",
                     [](RunConfig& c, std::size_t v) { c.workers = v; });
  o.add<std::size_t>(app, "--subsample-cap", "max frames per point cloud (0 = no cap)",
                     [](RunConfig& c, std::size_t v) { c.subsample_cap = v; });
  o.add<std::string>(app, "--group-a", "field=value[,value...] selector",
                     [](RunConfig& c, const std::string& v) { c.group_a = v; });
  o.add<std::string>(app, "--group-b", "field=value[,value...] selector",
                     [](RunConfig& c, const std::string& v) { c.group_b = v; });
  o.add<std::string>(app, "--thresholds", "comma-separated, sorted barcode levels",
                     [](RunConfig& c, const std::string& v) { c.thresholds = parse_number_list(v); });
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"Topological features of transformer attention maps and embeddings"};
  app.require_subcommand(1);

  struct Sub {
    CLI::App* app;
    Overrides overrides;
    std::string config_path;
    Task default_task;
    std::function<int(const RunConfig&)> fn;
  };
  std::vector<std::unique_ptr<Sub>> subs;
  auto add_sub = [&](const char* name, const char* desc, Task task,
                     std::function<int(const RunConfig&)> fn) -> Sub& {
    auto s = std::make_unique<Sub>();
    s->app = app.add_subcommand(name, desc);
    s->default_task = task;
    s->fn = std::move(fn);
    add_common(s->app, s->overrides, s->config_path);
    subs.push_back(std::move(s));
    return *subs.back();
  };

  auto& extract = add_sub("extract", "compute per-sample feature vectors into features.csv",
                          Task::Classify, cmd_extract);
  (void)extract;

  auto& train = add_sub("train-eval", "fit the L1 logistic model and report test metrics",
                        Task::Classify, cmd_train_eval);
  train.overrides.add<std::string>(train.app, "--train", "training features CSV",
                                   [](RunConfig& c, const std::string& v) { c.train_path = v; });
  train.overrides.add<std::string>(train.app, "--dev", "development features CSV",
                                   [](RunConfig& c, const std::string& v) { c.dev_path = v; });
  train.overrides.add<std::string>(train.app, "--test", "evaluation features CSV",
                                   [](RunConfig& c, const std::string& v) { c.test_path = v; });
  train.overrides.add<std::string>(train.app, "--positive-label", "positive class for EER",
                                   [](RunConfig& c, const std::string& v) { c.positive_label = v; });
  train.overrides.add<std::size_t>(train.app, "--max-iter", "optimizer iteration cap",
                                   [](RunConfig& c, std::size_t v) { c.max_iter = v; });

  auto& rank = add_sub("rank-heads", "rank heads by separation quality between two groups",
                       Task::RankHeads, cmd_rank_heads);
  rank.overrides.add<std::string>(rank.app, "--features", "features CSV with attention columns",
                                  [](RunConfig& c, const std::string& v) { c.features_path = v; });
  rank.overrides.add<std::string>(rank.app, "--feature", "per-head feature (default h0m_sym)",
                                  [](RunConfig& c, const std::string& v) { c.head_feature = v; });
  rank.overrides.add<std::size_t>(rank.app, "--max-per-group", "samples per group (0 = all)",
                                  [](RunConfig& c, std::size_t v) { c.max_per_group = v; });

  auto& corr = add_sub("correlate", "Pearson maps of a head feature against MFCC/PLP means",
                       Task::Correlate, cmd_correlate);
  corr.overrides.add<std::string>(corr.app, "--feature", "per-head feature (default h0m_pc)",
                                  [](RunConfig& c, const std::string& v) { c.head_feature = v; });
  corr.overrides.add<double>(corr.app, "--pearson-threshold", "flag heads with r >= this",
                             [](RunConfig& c, double v) { c.pearson_threshold = v; });

  auto& bars = add_sub("barcode-export", "phoneme-colored H0 barcodes for one head",
                       Task::BarcodeExport, cmd_barcode_export);
  bars.overrides.add<std::string>(bars.app, "--head", "LAYER,HEAD (0-based)",
                                  [](RunConfig& c, const std::string& v) { c.head = v; });

  synth::DatasetConfig synth_cfg;
  std::string synth_out;
  auto* synth_app = app.add_subcommand("synth", "write a small synthetic dataset");
  synth_app->add_option("--out", synth_out, "dataset root")->required();
  synth_app->add_option("--count", synth_cfg.samples, "number of utterances");
  synth_app->add_option("--frames", synth_cfg.frames, "frames per utterance");
  synth_app->add_option("--pairs", synth_cfg.pairs, "verification pairs to add");
  synth_app->add_option("--seed", synth_cfg.seed, "random seed");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitUsage;
  }

  try {
    if (synth_app->parsed()) {
      const auto manifest = synth::write_dataset(synth_out, synth_cfg);
      log("synth: wrote " + manifest.string());
      return 0;
    }
    for (auto& s : subs) {
      if (!s->app->parsed()) continue;
      RunConfig config;
      config.task = s->default_task;
      if (!s->config_path.empty()) apply_config_json(config, json::parse(read_text(s->config_path)));
      s->overrides.apply(config);
      return s->fn(config);
    }
  } catch (const Error& e) {
    log(std::string(topohead::to_string(e.code())) + ": " + e.what());
    return e.code() == ErrorCode::InvalidArgument ? kExitUsage : kExitFailure;
  } catch (const std::exception& e) {
    log(e.what());
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace topohead::cli
