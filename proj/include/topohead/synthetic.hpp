#pragma once

// Programmatic sample bundles with planted structure, for tests and demos.

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <vector>

#include "topohead/attention_features.hpp"
#include "topohead/bundle.hpp"
#include "topohead/manifest.hpp"

namespace topohead::synth {

/// a = (1 - t) * uniform + t * identity. Every off-diagonal weight of the
/// symmetrized graph is 1 - (1 - t) / n, and every row pair is 2t apart in L1.
void fill_mixture_head(std::span<float> out, std::size_t n, double t);

/// Row-wise softmax of N(0, temperature^2) logits.
void fill_random_head(std::span<float> out, std::size_t n, double temperature,
                      std::mt19937_64& rng);

/// Bundle with random softmax heads, Gaussian embeddings, MFCC and PLP frames.
io::SampleBundle random_bundle(std::size_t frames, std::size_t mfcc_frames,
                               std::mt19937_64& rng);

struct DatasetConfig {
  std::size_t samples = 24;
  std::size_t frames = 8;
  std::size_t mfcc_frames = 12;
  std::uint64_t seed = 7;
  /// Its mixture weight t differs by `effect_size` standard deviations between labels.
  attn::HeadIndex separating_head{6, 3};
  /// Its mixture weight t is an affine image of the sample's mean MFCC plus noise.
  attn::HeadIndex correlated_head{2, 4};
  double effect_size = 3.0;
  double base_mix = 0.3;
  double mix_std = 0.05;
  std::size_t pairs = 0;  // verification pair records appended to the manifest
};

struct Sample {
  io::SampleRecord record;
  io::SampleBundle bundle;
  double mfcc_offset = 0.0;
};

/// Labels alternate "a"/"b" (groups "A"/"B"); speakers cycle over 4 ids.
std::vector<Sample> make_dataset(const DatasetConfig& config);

/// Writes every bundle under root/<id>/ and root/manifest.jsonl; returns the manifest path.
std::filesystem::path write_dataset(const std::filesystem::path& root,
                                    const DatasetConfig& config);

}  // namespace topohead::synth
