#include "topohead/attention_features.hpp"

#include <algorithm>

#include "topohead/bundle.hpp"

namespace topohead::attn {
namespace {

std::string two_digits(std::size_t v) {
  return (v < 10 ? "0" : "") + std::to_string(v);
}

}  // namespace

std::size_t HeadIndex::flat() const noexcept { return layer * io::kHeads + head; }

HeadIndex HeadIndex::from_flat(std::size_t flat) {
  if (flat >= kHeadCount) throw Error(ErrorCode::OutOfRange, "head index out of range");
  return HeadIndex{flat / io::kHeads, flat % io::kHeads};
}

std::string HeadIndex::tag() const { return "L" + two_digits(layer) + "_H" + two_digits(head); }

AttentionMap::AttentionMap(std::span<const float> v, std::size_t size) : values(v), n(size) {
  if (v.size() != size * size) {
    throw Error(ErrorCode::SizeMismatch, "attention map buffer must hold n*n values");
  }
}

topo::DistanceMatrix sym_adjacency(const AttentionMap& a) {
  const std::size_t n = a.n;
  for (float v : a.values) {
    if (v < -io::kProbabilityTolerance || v > 1.0 + io::kProbabilityTolerance) {
      throw Error(ErrorCode::OutOfRange, "attention entries must lie in [0,1]");
    }
  }
  topo::DistanceMatrix d(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double w = 1.0 - std::max(a(i, j), a(j, i));
      d.set(i, j, std::clamp(w, 0.0, 1.0));
    }
  }
  return d;
}

double asymmetry_sum(const AttentionMap& a) {
  const std::size_t n = a.n;
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "empty attention map");
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) sum += a(i, j);
  }
  return sum / static_cast<double>(n * n);
}

DiagonalMeans diagonal_means(const AttentionMap& a) {
  const std::size_t n = a.n;
  if (n < 2) throw Error(ErrorCode::InvalidArgument, "diagonal means need n >= 2");
  DiagonalMeans m;
  for (std::size_t i = 0; i < n; ++i) m.main += a(i, i);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    m.upper += a(i, i + 1);
    m.lower += a(i + 1, i);
  }
  m.main /= static_cast<double>(n);
  m.upper /= static_cast<double>(n - 1);
  m.lower /= static_cast<double>(n - 1);
  return m;
}

double h0m_sym(const AttentionMap& a) {
  return topo::h0_mean(topo::h0_barcode(sym_adjacency(a)));
}

double h0m_pc(const AttentionMap& a) {
  const topo::RowMatrix<float> rows{a.values, a.n, a.n};
  return topo::h0_mean(topo::h0_barcode(topo::pairwise_distance(rows, topo::Metric::L1)));
}

const char* feature_suffix(HeadFeature kind) {
  switch (kind) {
    case HeadFeature::Asym: return "asym";
    case HeadFeature::Diag0: return "diag0";
    case HeadFeature::DiagPlus1: return "diagp1";
    case HeadFeature::DiagMinus1: return "diagm1";
    case HeadFeature::H0mSym: return "h0m_sym";
    case HeadFeature::H0mPc: return "h0m_pc";
  }
  return "?";
}

const std::vector<std::string>& attention_feature_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    out.reserve(kBlockSize);
    for (std::size_t flat = 0; flat < kHeadCount; ++flat) {
      const auto tag = HeadIndex::from_flat(flat).tag();
      for (std::size_t k = 0; k < kFeaturesPerHead; ++k) {
        out.push_back(tag + "_" + feature_suffix(static_cast<HeadFeature>(k)));
      }
    }
    return out;
  }();
  return names;
}

std::vector<double> AttentionFeatureBlock::algebraic() const {
  std::vector<double> out;
  out.reserve(kHeadCount * kAlgebraicPerHead);
  for (std::size_t flat = 0; flat < kHeadCount; ++flat) {
    for (std::size_t k = 0; k < kAlgebraicPerHead; ++k) {
      out.push_back(values[flat * kFeaturesPerHead + k]);
    }
  }
  return out;
}

std::vector<double> AttentionFeatureBlock::topological() const {
  std::vector<double> out;
  out.reserve(kHeadCount * kTopologicalPerHead);
  for (std::size_t flat = 0; flat < kHeadCount; ++flat) {
    for (std::size_t k = kAlgebraicPerHead; k < kFeaturesPerHead; ++k) {
      out.push_back(values[flat * kFeaturesPerHead + k]);
    }
  }
  return out;
}

HeadError::HeadError(HeadIndex head, const Error& cause)
    : Error(cause.code(), "head " + head.tag() + ": " + cause.what()), head_(head) {}

namespace {

void check_attention_shape(const io::Tensor& attention) {
  if (attention.rank() != 4 || attention.dim(0) != io::kLayers ||
      attention.dim(1) != io::kHeads || attention.dim(2) != attention.dim(3)) {
    throw Error(ErrorCode::ShapeMismatch, "attention tensor must be [12,12,n,n]");
  }
}

double head_feature(const AttentionMap& a, HeadFeature kind) {
  switch (kind) {
    case HeadFeature::Asym: return asymmetry_sum(a);
    case HeadFeature::Diag0: return diagonal_means(a).main;
    case HeadFeature::DiagPlus1: return diagonal_means(a).upper;
    case HeadFeature::DiagMinus1: return diagonal_means(a).lower;
    case HeadFeature::H0mSym: return h0m_sym(a);
    case HeadFeature::H0mPc: return h0m_pc(a);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown head feature");
}

}  // namespace

HeadFeature parse_head_feature(const std::string& name) {
  for (std::size_t k = 0; k < kFeaturesPerHead; ++k) {
    const auto kind = static_cast<HeadFeature>(k);
    if (name == feature_suffix(kind)) return kind;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown head feature '" + name + "'");
}

std::array<double, kHeadCount> head_feature_grid(const io::Tensor& attention,
                                                 HeadFeature kind) {
  check_attention_shape(attention);
  const std::size_t n = attention.dim(2);
  const std::span<const float> all(attention.data);
  std::array<double, kHeadCount> grid{};
  for (std::size_t flat = 0; flat < kHeadCount; ++flat) {
    try {
      grid[flat] = head_feature(AttentionMap(all.subspan(flat * n * n, n * n), n), kind);
    } catch (const Error& e) {
      throw HeadError(HeadIndex::from_flat(flat), e);
    }
  }
  return grid;
}

AttentionFeatureBlock attention_feature_block(const io::Tensor& attention) {
  check_attention_shape(attention);
  const std::size_t n = attention.dim(2);
  AttentionFeatureBlock block;
  block.values.resize(kBlockSize);
  const std::span<const float> all(attention.data);
  for (std::size_t flat = 0; flat < kHeadCount; ++flat) {
    const HeadIndex head = HeadIndex::from_flat(flat);
    try {
      const AttentionMap a(all.subspan(flat * n * n, n * n), n);
      const auto diag = diagonal_means(a);
      double* out = block.values.data() + flat * kFeaturesPerHead;
      out[0] = asymmetry_sum(a);
      out[1] = diag.main;
      out[2] = diag.upper;
      out[3] = diag.lower;
      out[4] = h0m_sym(a);
      out[5] = h0m_pc(a);
    } catch (const Error& e) {
      throw HeadError(head, e);
    }
  }
  return block;
}

}  // namespace topohead::attn
