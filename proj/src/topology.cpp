#include "topohead/topology.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <tuple>

#include "topohead/error.hpp"

namespace topohead::topo {

DistanceMatrix DistanceMatrix::from_values(std::size_t n, std::vector<double> values) {
  if (values.size() != n * n) {
    throw Error(ErrorCode::SizeMismatch, "distance buffer must hold n*n values");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (values[i * n + i] != 0.0) {
      throw Error(ErrorCode::InvalidArgument, "distance matrix diagonal must be zero");
    }
    for (std::size_t j = i + 1; j < n; ++j) {
      const double w = values[i * n + j];
      if (!std::isfinite(w) || w < 0.0) {
        throw Error(ErrorCode::InvalidArgument,
                    "distance weights must be finite and non-negative");
      }
      if (w != values[j * n + i]) {
        throw Error(ErrorCode::InvalidArgument, "distance matrix must be symmetric");
      }
    }
  }
  DistanceMatrix d;
  d.n_ = n;
  d.values_ = std::move(values);
  return d;
}

void DistanceMatrix::set(std::size_t i, std::size_t j, double w) {
  if (i == j || i >= n_ || j >= n_) {
    throw Error(ErrorCode::InvalidArgument, "invalid off-diagonal index");
  }
  if (!std::isfinite(w) || w < 0.0) {
    throw Error(ErrorCode::InvalidArgument,
                "distance weights must be finite and non-negative");
  }
  values_[i * n_ + j] = w;
  values_[j * n_ + i] = w;
}

DistanceMatrix elementwise_min(const DistanceMatrix& a, const DistanceMatrix& b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::SizeMismatch, "distance matrices differ in size");
  }
  const std::size_t n = a.size();
  DistanceMatrix m(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) m.set(i, j, std::min(a(i, j), b(i, j)));
  }
  return m;
}

bool edge_less(const Edge& a, const Edge& b) noexcept {
  return std::tie(a.weight, a.u, a.v) < std::tie(b.weight, b.u, b.v);
}

std::vector<Edge> mst(const DistanceMatrix& d) {
  const std::size_t n = d.size();
  std::vector<Edge> tree;
  if (n <= 1) return tree;
  tree.reserve(n - 1);

  // best[v] is the lightest (by edge_less) edge joining v to the tree so far.
  std::vector<Edge> best(n);
  std::vector<char> in_tree(n, 0);
  in_tree[0] = 1;
  for (std::size_t v = 1; v < n; ++v) best[v] = Edge{0, v, d(0, v)};

  for (std::size_t step = 1; step < n; ++step) {
    std::size_t pick = n;
    for (std::size_t v = 0; v < n; ++v) {
      if (!in_tree[v] && (pick == n || edge_less(best[v], best[pick]))) pick = v;
    }
    in_tree[pick] = 1;
    tree.push_back(best[pick]);
    for (std::size_t v = 0; v < n; ++v) {
      if (in_tree[v]) continue;
      Edge candidate{std::min(pick, v), std::max(pick, v), d(pick, v)};
      if (edge_less(candidate, best[v])) best[v] = candidate;
    }
  }
  std::sort(tree.begin(), tree.end(), edge_less);
  return tree;
}

double total_weight(std::span<const Edge> edges) {
  double total = 0.0;
  for (const auto& e : edges) total += e.weight;
  return total;
}

DisjointSets::DisjointSets(std::size_t n)
    : parent_(n), rank_(n, 0), min_vertex_(n), components_(n) {
  std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  std::iota(min_vertex_.begin(), min_vertex_.end(), std::size_t{0});
}

std::size_t DisjointSets::find(std::size_t x) {
  while (parent_[x] != x) {
    parent_[x] = parent_[parent_[x]];
    x = parent_[x];
  }
  return x;
}

bool DisjointSets::unite(std::size_t a, std::size_t b) {
  a = find(a);
  b = find(b);
  if (a == b) return false;
  if (rank_[a] < rank_[b]) std::swap(a, b);
  parent_[b] = a;
  if (rank_[a] == rank_[b]) ++rank_[a];
  min_vertex_[a] = std::min(min_vertex_[a], min_vertex_[b]);
  --components_;
  return true;
}

Barcode h0_barcode(const DistanceMatrix& d) {
  const auto tree = mst(d);
  Barcode b;
  b.bars.reserve(tree.size());
  b.merges.reserve(tree.size());
  DisjointSets sets(d.size());
  for (const auto& e : tree) {
    const std::size_t cu = sets.component_id(e.u);
    const std::size_t cv = sets.component_id(e.v);
    sets.unite(e.u, e.v);
    b.bars.push_back(e.weight);
    b.merges.push_back(Merge{e.weight, std::min(cu, cv), std::max(cu, cv), e});
  }
  return b;
}

double h0_mean(const Barcode& b) {
  if (b.bars.empty()) {
    throw Error(ErrorCode::UndefinedFeature, "H0 mean is undefined without finite bars");
  }
  double sum = 0.0;
  for (double bar : b.bars) sum += bar;
  return sum / static_cast<double>(b.bars.size());
}

std::size_t MergeTrace::component_count(std::size_t k) const {
  std::size_t count = 0;
  const auto& ids = membership.at(k);
  for (std::size_t v = 0; v < ids.size(); ++v) count += ids[v] == v;
  return count;
}

MergeTrace merge_trace(const DistanceMatrix& d, std::span<const double> thresholds) {
  if (!std::is_sorted(thresholds.begin(), thresholds.end())) {
    throw Error(ErrorCode::InvalidArgument, "merge_trace thresholds must be sorted");
  }
  // The MST carries all connectivity information of every threshold graph.
  const auto tree = mst(d);
  const std::size_t n = d.size();
  DisjointSets sets(n);
  MergeTrace trace;
  trace.thresholds.assign(thresholds.begin(), thresholds.end());
  trace.membership.reserve(thresholds.size());
  std::size_t next = 0;
  for (double eps : thresholds) {
    while (next < tree.size() && tree[next].weight <= eps) {
      sets.unite(tree[next].u, tree[next].v);
      ++next;
    }
    std::vector<std::size_t> ids(n);
    for (std::size_t v = 0; v < n; ++v) ids[v] = sets.component_id(v);
    trace.membership.push_back(std::move(ids));
  }
  return trace;
}

namespace {

template <class T>
DistanceMatrix pairwise_distance_impl(RowMatrix<T> points, Metric metric) {
  if (points.values.size() != points.rows * points.cols) {
    throw Error(ErrorCode::SizeMismatch, "point buffer does not match rows*cols");
  }
  const std::size_t n = points.rows;
  DistanceMatrix d(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto a = points.row(i);
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto b = points.row(j);
      double acc = 0.0;
      if (metric == Metric::L1) {
        for (std::size_t k = 0; k < points.cols; ++k) {
          acc += std::abs(static_cast<double>(a[k]) - static_cast<double>(b[k]));
        }
      } else {
        for (std::size_t k = 0; k < points.cols; ++k) {
          const double diff = static_cast<double>(a[k]) - static_cast<double>(b[k]);
          acc += diff * diff;
        }
        acc = std::sqrt(acc);
      }
      d.set(i, j, acc);
    }
  }
  return d;
}

}  // namespace

DistanceMatrix pairwise_distance(RowMatrix<float> points, Metric metric) {
  return pairwise_distance_impl(points, metric);
}

DistanceMatrix pairwise_distance(RowMatrix<double> points, Metric metric) {
  return pairwise_distance_impl(points, metric);
}

double rtd0(const DistanceMatrix& a, const DistanceMatrix& b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::SizeMismatch,
                "rtd0 needs graphs on the same vertex set, got n=" +
                    std::to_string(a.size()) + " and n=" + std::to_string(b.size()));
  }
  if (a.size() < 2) {
    throw Error(ErrorCode::InvalidArgument, "rtd0 needs at least two vertices");
  }
  const double wa = total_weight(mst(a));
  const double wb = total_weight(mst(b));
  const double wmin = total_weight(mst(elementwise_min(a, b)));
  // W(min) <= W(a), W(b) holds exactly; clamp away summation rounding.
  return 0.5 * (std::max(0.0, wa - wmin) + std::max(0.0, wb - wmin));
}

}  // namespace topohead::topo
