#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "topohead/bundle.hpp"
#include "topohead/topology.hpp"

namespace topohead::emb {

inline constexpr std::size_t kBlockSize = 51;
inline constexpr std::size_t kPooledSize = io::kLayers * io::kEmbeddingDim;  // 9216
inline constexpr std::size_t kDefaultFrameCap = 1500;

/// H0 mean of the rows of `x` as an L2 point cloud. Requires at least 2 rows.
double layer_h0m(topo::RowMatrix<float> x);

struct LayerRtds {
  double to_last = 0.0;
  double to_init = 0.0;
};
LayerRtds layer_rtds(topo::RowMatrix<float> xi, topo::RowMatrix<float> x_last,
                     topo::RowMatrix<float> x_init);

struct MfccBlock {
  std::array<double, io::kMfccCoefficients> means{};
  double h0m = 0.0;
};
/// Column means over all frames, and the H0 mean of the frames (every
/// `stride`-th frame) as an L2 point cloud. Requires T >= 2.
MfccBlock mfcc_block(const io::Tensor& mfcc, std::size_t stride = 1);

struct EmbeddingFeatureBlock {
  std::array<double, io::kLayers> h0m_per_layer{};  // layers 1..12
  std::array<double, io::kLayers> rtd_to_last{};
  std::array<double, io::kLayers> rtd_to_init{};
  std::array<double, io::kMfccCoefficients> mfcc_means{};
  double h0m_mfcc = 0.0;
  double h0m_init = 0.0;

  // Not features: row strides applied to the point clouds.
  std::size_t frame_stride = 1;
  std::size_t mfcc_stride = 1;

  std::vector<double> values() const;
};

const std::vector<std::string>& embedding_feature_names();

/// Every `stride`-th value with stride = ceil(count / cap), or 1 if count <= cap.
std::size_t subsample_stride(std::size_t count, std::size_t cap);

EmbeddingFeatureBlock embedding_feature_block(const io::SampleBundle& bundle,
                                              std::size_t frame_cap = kDefaultFrameCap);

enum class Pooling { First, Mean };

const char* pooling_name(Pooling mode);

/// Per-layer pooled rows of X(1)..X(12), concatenated (12 x 768).
std::vector<double> pooled_baseline(const io::SampleBundle& bundle, Pooling mode);

const std::vector<std::string>& pooled_feature_names(Pooling mode);

}  // namespace topohead::emb
