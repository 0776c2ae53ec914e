#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "topohead/error.hpp"
#include "topohead/tensor_io.hpp"
#include "topohead/topology.hpp"

namespace topohead::attn {

struct HeadIndex {
  std::size_t layer = 0;  // 0..11
  std::size_t head = 0;   // 0..11

  std::size_t flat() const noexcept;
  static HeadIndex from_flat(std::size_t flat);
  std::string tag() const;  // "L03_H07"

  friend auto operator<=>(const HeadIndex&, const HeadIndex&) = default;
};

inline constexpr std::size_t kHeadCount = 144;

/// Square attention map of one head. Row-major, n x n.
struct AttentionMap {
  std::span<const float> values;
  std::size_t n = 0;

  AttentionMap(std::span<const float> v, std::size_t size);
  double operator()(std::size_t i, std::size_t j) const { return values[i * n + j]; }
};

/// Graph weights 1 - max(a_ij, a_ji) with a zero diagonal.
topo::DistanceMatrix sym_adjacency(const AttentionMap& a);

/// Sum of the strictly upper triangle, divided by n^2.
double asymmetry_sum(const AttentionMap& a);

struct DiagonalMeans {
  double main = 0.0;
  double upper = 0.0;  // offset +1
  double lower = 0.0;  // offset -1
};
DiagonalMeans diagonal_means(const AttentionMap& a);

double h0m_sym(const AttentionMap& a);
double h0m_pc(const AttentionMap& a);

enum class HeadFeature : std::size_t { Asym, Diag0, DiagPlus1, DiagMinus1, H0mSym, H0mPc };
inline constexpr std::size_t kFeaturesPerHead = 6;
inline constexpr std::size_t kAlgebraicPerHead = 4;
inline constexpr std::size_t kTopologicalPerHead = 2;
inline constexpr std::size_t kBlockSize = kHeadCount * kFeaturesPerHead;  // 864

const char* feature_suffix(HeadFeature kind);

/// Canonical column names, e.g. "L03_H07_h0m_sym".
const std::vector<std::string>& attention_feature_names();

/// The six features of every head, ordered by layer, head, then kind.
struct AttentionFeatureBlock {
  std::vector<double> values;

  double at(HeadIndex h, HeadFeature kind) const {
    return values[h.flat() * kFeaturesPerHead + static_cast<std::size_t>(kind)];
  }
  std::vector<double> algebraic() const;    // 576
  std::vector<double> topological() const;  // 288
};

/// Raised when one head fails; carries the offending head.
class HeadError : public Error {
 public:
  HeadError(HeadIndex head, const Error& cause);
  HeadIndex head() const noexcept { return head_; }

 private:
  HeadIndex head_;
};

/// Requires a [12, 12, n, n] tensor with n >= 2.
AttentionFeatureBlock attention_feature_block(const io::Tensor& attention);

/// One feature kind for all 144 heads, indexed by HeadIndex::flat().
std::array<double, kHeadCount> head_feature_grid(const io::Tensor& attention, HeadFeature kind);

/// Parses "asym", "diag0", ..., "h0m_pc".
HeadFeature parse_head_feature(const std::string& name);

}  // namespace topohead::attn
