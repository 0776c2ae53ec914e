#pragma once

// TTEN v1: a minimal little-endian container for dense float32 tensors.
//
//   offset  size        field
//   0       4           magic "TTEN"
//   4       1           version (1)
//   5       1           dtype (0x01 = float32)
//   6       1           ndim (1..4)
//   7       1           reserved (0)
//   8       4 * ndim    dims, u32 little-endian
//   ...     4 * prod    row-major float32 little-endian payload

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace topohead::io {

enum class DType : std::uint8_t { Float32 = 0x01 };

inline constexpr std::uint8_t kTtenVersion = 1;
inline constexpr std::size_t kMaxRank = 4;

struct Tensor {
  DType dtype = DType::Float32;
  std::vector<std::uint32_t> shape;
  std::vector<float> data;

  Tensor() = default;
  Tensor(std::vector<std::uint32_t> shape_, std::vector<float> data_)
      : shape(std::move(shape_)), data(std::move(data_)) {}

  std::size_t rank() const noexcept { return shape.size(); }
  std::size_t dim(std::size_t axis) const { return shape.at(axis); }
  std::size_t element_count() const noexcept;

  friend bool operator==(const Tensor&, const Tensor&) = default;
};

/// Throws Error(BadShape | NonFinite) if `t` is not a valid v1 tensor.
void validate(const Tensor& t);

std::vector<std::byte> encode_tensor(const Tensor& t);
Tensor decode_tensor(std::span<const std::byte> bytes);

void write_tensor(const std::filesystem::path& path, const Tensor& t);
Tensor read_tensor(const std::filesystem::path& path);

}  // namespace topohead::io
