#include "topohead/bundle.hpp"

#include <cmath>
#include <fstream>

#include "topohead/error.hpp"

namespace topohead::io {
namespace {

std::string shape_string(const Tensor& t) {
  std::string s = "[";
  for (std::size_t k = 0; k < t.shape.size(); ++k) {
    if (k) s += ",";
    s += std::to_string(t.shape[k]);
  }
  return s + "]";
}

void expect_shape(const Tensor& t, std::size_t rank, const char* what) {
  validate(t);
  if (t.rank() != rank) {
    throw Error(ErrorCode::ShapeMismatch, std::string(what) + " must have rank " +
                                              std::to_string(rank) + ", got " +
                                              shape_string(t));
  }
}

std::vector<std::string> read_phones(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingFile, "cannot open " + path.string());
  std::vector<std::string> labels;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    labels.push_back(line);
  }
  // A trailing empty line is the file's final newline, not a label.
  while (!labels.empty() && labels.back().empty()) labels.pop_back();
  return labels;
}

}  // namespace

std::span<const float> SampleBundle::head(std::size_t layer, std::size_t h) const {
  const std::size_t n = frames();
  const std::size_t offset = ((layer * attention.dim(1)) + h) * n * n;
  return std::span<const float>(attention.data).subspan(offset, n * n);
}

std::filesystem::path embedding_file_name(std::size_t layer) {
  std::string name = "emb_";
  if (layer < 10) name += '0';
  return name + std::to_string(layer) + ".tten";
}

void validate_bundle(const SampleBundle& b) {
  expect_shape(b.attention, 4, "attention");
  const auto& s = b.attention.shape;
  if (s[0] != kLayers || s[1] != kHeads || s[2] != s[3]) {
    throw Error(ErrorCode::ShapeMismatch,
                "attention must be [12,12,n,n], got " + shape_string(b.attention));
  }
  const std::size_t n = s[2];

  for (std::size_t layer = 0; layer < kLayers; ++layer) {
    for (std::size_t h = 0; h < kHeads; ++h) {
      auto a = b.head(layer, h);
      for (std::size_t i = 0; i < n; ++i) {
        double row_sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          const double v = a[i * n + j];
          if (v < -kProbabilityTolerance || v > 1.0 + kProbabilityTolerance) {
            throw Error(ErrorCode::OutOfRange,
                        "attention entry outside [0,1] at layer " + std::to_string(layer) +
                            " head " + std::to_string(h));
          }
          row_sum += v;
        }
        if (std::abs(row_sum - 1.0) > kRowSumTolerance) {
          throw Error(ErrorCode::RowSumViolation,
                      "attention row " + std::to_string(i) + " of layer " +
                          std::to_string(layer) + " head " + std::to_string(h) +
                          " sums to " + std::to_string(row_sum));
        }
      }
    }
  }

  if (b.embeddings.size() != kEmbeddingTensors) {
    throw Error(ErrorCode::ShapeMismatch, "expected 13 embedding tensors, got " +
                                              std::to_string(b.embeddings.size()));
  }
  for (std::size_t layer = 0; layer < b.embeddings.size(); ++layer) {
    const auto& e = b.embeddings[layer];
    expect_shape(e, 2, "embedding");
    if (e.shape[0] != n || e.shape[1] != kEmbeddingDim) {
      throw Error(ErrorCode::ShapeMismatch,
                  "embedding " + std::to_string(layer) + " must be [" + std::to_string(n) +
                      ",768], got " + shape_string(e));
    }
  }

  expect_shape(b.mfcc, 2, "mfcc");
  if (b.mfcc.shape[1] != kMfccCoefficients) {
    throw Error(ErrorCode::ShapeMismatch,
                "mfcc must have 13 coefficients, got " + shape_string(b.mfcc));
  }
  if (b.plp) expect_shape(*b.plp, 2, "plp");
  if (b.phoneme_labels && b.phoneme_labels->size() != n) {
    throw Error(ErrorCode::ShapeMismatch,
                "phones.txt has " + std::to_string(b.phoneme_labels->size()) +
                    " labels for " + std::to_string(n) + " frames");
  }
}

SampleBundle load_sample_bundle(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  auto require = [&](const fs::path& name) {
    auto p = dir / name;
    if (!fs::exists(p)) throw Error(ErrorCode::MissingFile, "missing " + p.string());
    return read_tensor(p);
  };

  SampleBundle b;
  b.attention = require("attention.tten");
  b.embeddings.reserve(kEmbeddingTensors);
  for (std::size_t layer = 0; layer < kEmbeddingTensors; ++layer) {
    b.embeddings.push_back(require(embedding_file_name(layer)));
  }
  b.mfcc = require("mfcc.tten");
  if (fs::exists(dir / "plp.tten")) b.plp = read_tensor(dir / "plp.tten");
  if (fs::exists(dir / "phones.txt")) b.phoneme_labels = read_phones(dir / "phones.txt");

  try {
    validate_bundle(b);
  } catch (const Error& e) {
    throw Error(e.code(), dir.string() + ": " + e.what());
  }
  return b;
}

SampleBundle load_sample_bundle(const SampleRecord& record) {
  if (record.tensor_dir.empty()) {
    throw Error(ErrorCode::InvalidArgument,
                "record '" + record.id + "' has no tensor_dir");
  }
  return load_sample_bundle(record.tensor_dir);
}

void write_sample_bundle(const std::filesystem::path& dir, const SampleBundle& b) {
  validate_bundle(b);
  std::filesystem::create_directories(dir);
  write_tensor(dir / "attention.tten", b.attention);
  for (std::size_t layer = 0; layer < b.embeddings.size(); ++layer) {
    write_tensor(dir / embedding_file_name(layer), b.embeddings[layer]);
  }
  write_tensor(dir / "mfcc.tten", b.mfcc);
  if (b.plp) write_tensor(dir / "plp.tten", *b.plp);
  if (b.phoneme_labels) {
    std::ofstream out(dir / "phones.txt", std::ios::trunc);
    for (const auto& label : *b.phoneme_labels) out << label << '\n';
    if (!out) throw Error(ErrorCode::Io, "write failed for phones.txt");
  }
}

}  // namespace topohead::io
