#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace topohead {

enum class ErrorCode {
  Io,
  BadMagic,
  VersionMismatch,
  BadDtype,
  BadShape,
  Truncated,
  TrailingBytes,
  NonFinite,
  MalformedManifest,
  DuplicateId,
  DanglingReference,
  MissingFile,
  ShapeMismatch,
  RowSumViolation,
  OutOfRange,
  InvalidArgument,
  UndefinedFeature,
  SizeMismatch,
  DegenerateDistribution,
  SingleClass,
};

std::string_view to_string(ErrorCode code);

/// Exception type used throughout the library; `code()` distinguishes failure kinds.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace topohead
