#include "topohead/embedding_features.hpp"

#include "topohead/error.hpp"

namespace topohead::emb {
namespace {

std::string two_digits(std::size_t v) { return (v < 10 ? "0" : "") + std::to_string(v); }

topo::RowMatrix<float> view(const io::Tensor& t) {
  return {t.data, t.dim(0), t.dim(1)};
}

/// Keeps every `stride`-th row; the buffer backs the returned view.
topo::RowMatrix<float> strided_rows(const io::Tensor& t, std::size_t stride,
                                    std::vector<float>& buffer) {
  if (stride <= 1) return view(t);
  const std::size_t cols = t.dim(1);
  buffer.clear();
  std::size_t rows = 0;
  for (std::size_t r = 0; r < t.dim(0); r += stride, ++rows) {
    buffer.insert(buffer.end(), t.data.begin() + r * cols, t.data.begin() + (r + 1) * cols);
  }
  return {buffer, rows, cols};
}

topo::DistanceMatrix l2(topo::RowMatrix<float> x) {
  return topo::pairwise_distance(x, topo::Metric::L2);
}

}  // namespace

double layer_h0m(topo::RowMatrix<float> x) {
  if (x.rows < 2) throw Error(ErrorCode::InvalidArgument, "layer_h0m needs n >= 2 rows");
  return topo::h0_mean(topo::h0_barcode(l2(x)));
}

LayerRtds layer_rtds(topo::RowMatrix<float> xi, topo::RowMatrix<float> x_last,
                     topo::RowMatrix<float> x_init) {
  if (xi.rows != x_last.rows || xi.rows != x_init.rows) {
    throw Error(ErrorCode::SizeMismatch, "layer_rtds needs equal frame counts");
  }
  const auto di = l2(xi);
  return {topo::rtd0(di, l2(x_last)), topo::rtd0(di, l2(x_init))};
}

MfccBlock mfcc_block(const io::Tensor& mfcc, std::size_t stride) {
  if (mfcc.rank() != 2 || mfcc.dim(1) != io::kMfccCoefficients) {
    throw Error(ErrorCode::ShapeMismatch, "mfcc must be [T,13]");
  }
  const std::size_t frames = mfcc.dim(0);
  if (frames < 2) throw Error(ErrorCode::InvalidArgument, "mfcc_block needs T >= 2 frames");
  MfccBlock out;
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t c = 0; c < io::kMfccCoefficients; ++c) {
      out.means[c] += mfcc.data[t * io::kMfccCoefficients + c];
    }
  }
  for (auto& m : out.means) m /= static_cast<double>(frames);
  std::vector<float> buffer;
  auto cloud = strided_rows(mfcc, stride, buffer);
  if (cloud.rows < 2) cloud = view(mfcc);
  out.h0m = topo::h0_mean(topo::h0_barcode(l2(cloud)));
  return out;
}

std::vector<double> EmbeddingFeatureBlock::values() const {
  std::vector<double> out;
  out.reserve(kBlockSize);
  out.insert(out.end(), h0m_per_layer.begin(), h0m_per_layer.end());
  out.insert(out.end(), rtd_to_last.begin(), rtd_to_last.end());
  out.insert(out.end(), rtd_to_init.begin(), rtd_to_init.end());
  out.insert(out.end(), mfcc_means.begin(), mfcc_means.end());
  out.push_back(h0m_mfcc);
  out.push_back(h0m_init);
  return out;
}

const std::vector<std::string>& embedding_feature_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    out.reserve(kBlockSize);
    for (const char* kind : {"h0m", "rtd_last", "rtd_init"}) {
      for (std::size_t layer = 1; layer <= io::kLayers; ++layer) {
        out.push_back("emb_L" + two_digits(layer) + "_" + kind);
      }
    }
    for (std::size_t c = 0; c < io::kMfccCoefficients; ++c) {
      out.push_back("mfcc_mean_" + two_digits(c));
    }
    out.push_back("mfcc_h0m");
    out.push_back("emb_L00_h0m");
    return out;
  }();
  return names;
}

std::size_t subsample_stride(std::size_t count, std::size_t cap) {
  if (cap == 0 || count <= cap) return 1;
  return (count + cap - 1) / cap;
}

EmbeddingFeatureBlock embedding_feature_block(const io::SampleBundle& bundle,
                                              std::size_t frame_cap) {
  if (bundle.embeddings.size() != io::kEmbeddingTensors) {
    throw Error(ErrorCode::ShapeMismatch, "bundle must carry 13 embedding tensors");
  }
  EmbeddingFeatureBlock block;
  const std::size_t n = bundle.embeddings.front().dim(0);
  block.frame_stride = subsample_stride(n, frame_cap);
  block.mfcc_stride = subsample_stride(bundle.mfcc.dim(0), frame_cap);

  std::vector<float> buffer;
  auto cloud = [&](std::size_t layer) {
    return l2(strided_rows(bundle.embeddings[layer], block.frame_stride, buffer));
  };
  const auto d_init = cloud(0);
  const auto d_last = cloud(io::kLayers);
  if (d_init.size() < 2) {
    throw Error(ErrorCode::InvalidArgument, "embedding features need n >= 2 frames");
  }
  block.h0m_init = topo::h0_mean(topo::h0_barcode(d_init));

  for (std::size_t layer = 1; layer <= io::kLayers; ++layer) {
    const auto d = layer == io::kLayers ? d_last : cloud(layer);
    block.h0m_per_layer[layer - 1] = topo::h0_mean(topo::h0_barcode(d));
    block.rtd_to_last[layer - 1] = topo::rtd0(d, d_last);
    block.rtd_to_init[layer - 1] = topo::rtd0(d, d_init);
  }

  const auto mfcc = mfcc_block(bundle.mfcc, block.mfcc_stride);
  block.mfcc_means = mfcc.means;
  block.h0m_mfcc = mfcc.h0m;
  return block;
}

const char* pooling_name(Pooling mode) { return mode == Pooling::First ? "first" : "mean"; }

std::vector<double> pooled_baseline(const io::SampleBundle& bundle, Pooling mode) {
  std::vector<double> out;
  out.reserve(kPooledSize);
  for (std::size_t layer = 1; layer <= io::kLayers; ++layer) {
    const auto& x = bundle.embeddings.at(layer);
    if (x.rank() != 2 || x.dim(1) != io::kEmbeddingDim) {
      throw Error(ErrorCode::ShapeMismatch, "embeddings must be [n,768]");
    }
    const std::size_t rows = mode == Pooling::First ? 1 : x.dim(0);
    std::vector<double> acc(io::kEmbeddingDim, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < io::kEmbeddingDim; ++c) {
        acc[c] += x.data[r * io::kEmbeddingDim + c];
      }
    }
    for (double v : acc) out.push_back(v / static_cast<double>(rows));
  }
  return out;
}

const std::vector<std::string>& pooled_feature_names(Pooling mode) {
  static const auto build = [](const char* tag) {
    std::vector<std::string> out;
    out.reserve(kPooledSize);
    for (std::size_t layer = 1; layer <= io::kLayers; ++layer) {
      for (std::size_t c = 0; c < io::kEmbeddingDim; ++c) {
        std::string dim = std::to_string(c);
        dim.insert(0, 3 - dim.size(), '0');
        out.push_back(std::string("pool_") + tag + "_L" + two_digits(layer) + "_d" + dim);
      }
    }
    return out;
  };
  static const std::vector<std::string> first = build("first");
  static const std::vector<std::string> mean = build("mean");
  return mode == Pooling::First ? first : mean;
}

}  // namespace topohead::emb
