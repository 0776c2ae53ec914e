#include "topohead/tensor_io.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <string>

#include "topohead/error.hpp"

namespace topohead::io {
namespace {

constexpr std::byte kMagic[4] = {std::byte{'T'}, std::byte{'T'},
                                 std::byte{'E'}, std::byte{'N'}};
constexpr std::size_t kPreambleSize = 8;

void put_u32(std::vector<std::byte>& out, std::uint32_t v) {
  for (int shift = 0; shift < 32; shift += 8) {
    out.push_back(static_cast<std::byte>((v >> shift) & 0xFFu));
  }
}

std::uint32_t get_u32(std::span<const std::byte> in, std::size_t offset) {
  std::uint32_t v = 0;
  for (std::size_t k = 0; k < 4; ++k) {
    v |= static_cast<std::uint32_t>(in[offset + k]) << (8 * k);
  }
  return v;
}

}  // namespace

std::size_t Tensor::element_count() const noexcept {
  if (shape.empty()) return 0;
  std::size_t count = 1;
  for (auto d : shape) count *= d;
  return count;
}

void validate(const Tensor& t) {
  if (t.dtype != DType::Float32) {
    throw Error(ErrorCode::BadDtype, "only float32 tensors are supported");
  }
  if (t.shape.empty() || t.shape.size() > kMaxRank) {
    throw Error(ErrorCode::BadShape,
                "tensor rank must be 1..4, got " + std::to_string(t.shape.size()));
  }
  for (auto d : t.shape) {
    if (d == 0) throw Error(ErrorCode::BadShape, "zero-sized tensor dimension");
  }
  if (t.element_count() != t.data.size()) {
    throw Error(ErrorCode::BadShape,
                "shape holds " + std::to_string(t.element_count()) +
                    " elements but data has " + std::to_string(t.data.size()));
  }
  for (std::size_t i = 0; i < t.data.size(); ++i) {
    if (!std::isfinite(t.data[i])) {
      throw Error(ErrorCode::NonFinite,
                  "non-finite element at flat index " + std::to_string(i));
    }
  }
}

std::vector<std::byte> encode_tensor(const Tensor& t) {
  validate(t);
  std::vector<std::byte> out(std::begin(kMagic), std::end(kMagic));
  out.reserve(kPreambleSize + 4 * t.rank() + 4 * t.data.size());
  out.push_back(std::byte{kTtenVersion});
  out.push_back(static_cast<std::byte>(t.dtype));
  out.push_back(static_cast<std::byte>(t.rank()));
  out.push_back(std::byte{0});
  for (auto d : t.shape) put_u32(out, d);
  for (float v : t.data) put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

Tensor decode_tensor(std::span<const std::byte> bytes) {
  if (bytes.size() < kPreambleSize) {
    throw Error(ErrorCode::Truncated, "file shorter than the TTEN preamble");
  }
  for (std::size_t k = 0; k < 4; ++k) {
    if (bytes[k] != kMagic[k]) throw Error(ErrorCode::BadMagic, "missing TTEN magic");
  }
  if (bytes[4] != std::byte{kTtenVersion}) {
    throw Error(ErrorCode::VersionMismatch,
                "unsupported TTEN version " +
                    std::to_string(static_cast<int>(bytes[4])));
  }
  if (bytes[5] != static_cast<std::byte>(DType::Float32)) {
    throw Error(ErrorCode::BadDtype, "unsupported dtype code " +
                                         std::to_string(static_cast<int>(bytes[5])));
  }
  const auto ndim = static_cast<std::size_t>(bytes[6]);
  if (ndim == 0 || ndim > kMaxRank) {
    throw Error(ErrorCode::BadShape, "ndim must be 1..4, got " + std::to_string(ndim));
  }
  const std::size_t header_size = kPreambleSize + 4 * ndim;
  if (bytes.size() < header_size) {
    throw Error(ErrorCode::Truncated, "truncated dimension header");
  }

  Tensor t;
  t.shape.resize(ndim);
  for (std::size_t k = 0; k < ndim; ++k) {
    t.shape[k] = get_u32(bytes, kPreambleSize + 4 * k);
    if (t.shape[k] == 0) throw Error(ErrorCode::BadShape, "zero-sized tensor dimension");
  }
  const std::size_t count = t.element_count();
  const std::size_t expected = header_size + 4 * count;
  if (bytes.size() < expected) {
    throw Error(ErrorCode::Truncated,
                "payload holds " + std::to_string((bytes.size() - header_size) / 4) +
                    " of " + std::to_string(count) + " elements");
  }
  if (bytes.size() > expected) {
    throw Error(ErrorCode::TrailingBytes, "unexpected bytes after payload");
  }
  t.data.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    t.data[i] = std::bit_cast<float>(get_u32(bytes, header_size + 4 * i));
    if (!std::isfinite(t.data[i])) {
      throw Error(ErrorCode::NonFinite,
                  "non-finite element at flat index " + std::to_string(i));
    }
  }
  return t;
}

void write_tensor(const std::filesystem::path& path, const Tensor& t) {
  const auto bytes = encode_tensor(t);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

Tensor read_tensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingFile, "cannot open " + path.string());
  std::vector<char> raw((std::istreambuf_iterator<char>(in)),
                        std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorCode::Io, "read failed for " + path.string());
  try {
    return decode_tensor(std::as_bytes(std::span(raw)));
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

}  // namespace topohead::io
