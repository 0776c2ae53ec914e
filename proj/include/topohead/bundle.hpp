#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "topohead/manifest.hpp"
#include "topohead/tensor_io.hpp"

namespace topohead::io {

// Geometry of the upstream encoder (base-size speech Transformer).
inline constexpr std::size_t kLayers = 12;
inline constexpr std::size_t kHeads = 12;
inline constexpr std::size_t kEmbeddingDim = 768;
inline constexpr std::size_t kEmbeddingTensors = kLayers + 1;  // X(0) .. X(12)
inline constexpr std::size_t kMfccCoefficients = 13;

inline constexpr double kRowSumTolerance = 1e-3;
inline constexpr double kProbabilityTolerance = 1e-6;

/// Everything the feature modules need for one utterance.
struct SampleBundle {
  Tensor attention;                // [12, 12, n, n]
  std::vector<Tensor> embeddings;  // 13 x [n, 768]
  Tensor mfcc;                     // [T, 13]
  std::optional<Tensor> plp;       // [T, p]
  std::optional<std::vector<std::string>> phoneme_labels;  // n labels

  std::size_t frames() const { return attention.dim(2); }

  /// Row-major n x n view of one head's attention map.
  std::span<const float> head(std::size_t layer, std::size_t head) const;
};

/// Checks shapes, value ranges and softmax row sums. Throws Error.
void validate_bundle(const SampleBundle& bundle);

std::filesystem::path embedding_file_name(std::size_t layer);

/// Loads attention.tten, emb_00..emb_12.tten, mfcc.tten and the optional
/// plp.tten / phones.txt from `record.tensor_dir`.
SampleBundle load_sample_bundle(const SampleRecord& record);
SampleBundle load_sample_bundle(const std::filesystem::path& tensor_dir);

void write_sample_bundle(const std::filesystem::path& tensor_dir,
                         const SampleBundle& bundle);

}  // namespace topohead::io
