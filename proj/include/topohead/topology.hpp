#pragma once

// Zero-dimensional persistent homology of weighted complete graphs.
//
// For the threshold filtration of a complete graph every vertex is born at 0,
// so the finite H0 bars are exactly the minimum spanning tree edge weights and
// the merge order is Kruskal's insertion order.

#include <cstddef>
#include <span>
#include <vector>

namespace topohead::topo {

/// Symmetric, zero-diagonal, non-negative finite weights on n vertices.
class DistanceMatrix {
 public:
  DistanceMatrix() = default;
  explicit DistanceMatrix(std::size_t n) : n_(n), values_(n * n, 0.0) {}

  /// Validates and adopts a row-major n x n buffer.
  static DistanceMatrix from_values(std::size_t n, std::vector<double> values);

  std::size_t size() const noexcept { return n_; }
  double operator()(std::size_t i, std::size_t j) const { return values_[i * n_ + j]; }

  /// Sets d(i,j) = d(j,i) = w. Requires i != j and finite w >= 0.
  void set(std::size_t i, std::size_t j, double w);

  std::span<const double> values() const noexcept { return values_; }

  friend bool operator==(const DistanceMatrix&, const DistanceMatrix&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<double> values_;
};

DistanceMatrix elementwise_min(const DistanceMatrix& a, const DistanceMatrix& b);

struct Edge {
  std::size_t u = 0;  // u < v
  std::size_t v = 0;
  double weight = 0.0;

  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Strict total order used for every tie: (weight, u, v).
bool edge_less(const Edge& a, const Edge& b) noexcept;

/// Dense O(n^2) Prim. Edges are returned sorted by edge_less.
std::vector<Edge> mst(const DistanceMatrix& d);

double total_weight(std::span<const Edge> edges);

struct Merge {
  double threshold = 0.0;
  std::size_t survivor = 0;  // min vertex id of the resulting component
  std::size_t absorbed = 0;  // min vertex id of the component that dies
  Edge edge;
};

struct Barcode {
  std::vector<double> bars;    // non-decreasing death thresholds
  std::vector<Merge> merges;   // one per bar, same order
};

Barcode h0_barcode(const DistanceMatrix& d);

/// Mean finite bar length. Throws UndefinedFeature for a one-vertex graph.
double h0_mean(const Barcode& b);

/// Union-find whose component id is the smallest vertex index it contains.
class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n);

  std::size_t find(std::size_t x);
  /// Returns false if already joined.
  bool unite(std::size_t a, std::size_t b);
  std::size_t component_id(std::size_t x) { return min_vertex_[find(x)]; }
  std::size_t component_count() const noexcept { return components_; }

 private:
  std::vector<std::size_t> parent_;
  std::vector<std::size_t> rank_;
  std::vector<std::size_t> min_vertex_;
  std::size_t components_;
};

struct MergeTrace {
  std::vector<double> thresholds;
  /// membership[k][v] = component id of vertex v at thresholds[k].
  std::vector<std::vector<std::size_t>> membership;

  std::size_t component_count(std::size_t k) const;
};

/// Component membership after inserting every edge with weight <= eps.
/// Thresholds must be sorted non-decreasing.
MergeTrace merge_trace(const DistanceMatrix& d, std::span<const double> thresholds);

enum class Metric { L1, L2 };

/// Non-owning row-major matrix view.
template <class T>
struct RowMatrix {
  std::span<const T> values;
  std::size_t rows = 0;
  std::size_t cols = 0;

  std::span<const T> row(std::size_t r) const { return values.subspan(r * cols, cols); }
};

DistanceMatrix pairwise_distance(RowMatrix<float> points, Metric metric);
DistanceMatrix pairwise_distance(RowMatrix<double> points, Metric metric);

/// Zero-dimensional divergence between two graphs on shared vertices:
/// half the summed MST-weight gaps of each graph against their element-wise
/// minimum. Zero when a == b; never negative.
double rtd0(const DistanceMatrix& a, const DistanceMatrix& b);

}  // namespace topohead::topo
