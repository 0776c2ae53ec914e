#include "topohead/error.hpp"

namespace topohead {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::Io: return "io";
    case ErrorCode::BadMagic: return "bad-magic";
    case ErrorCode::VersionMismatch: return "version-mismatch";
    case ErrorCode::BadDtype: return "bad-dtype";
    case ErrorCode::BadShape: return "bad-shape";
    case ErrorCode::Truncated: return "truncated";
    case ErrorCode::TrailingBytes: return "trailing-bytes";
    case ErrorCode::NonFinite: return "non-finite";
    case ErrorCode::MalformedManifest: return "malformed-manifest";
    case ErrorCode::DuplicateId: return "duplicate-id";
    case ErrorCode::DanglingReference: return "dangling-reference";
    case ErrorCode::MissingFile: return "missing-file";
    case ErrorCode::ShapeMismatch: return "shape-mismatch";
    case ErrorCode::RowSumViolation: return "row-sum-violation";
    case ErrorCode::OutOfRange: return "out-of-range";
    case ErrorCode::InvalidArgument: return "invalid-argument";
    case ErrorCode::UndefinedFeature: return "undefined-feature";
    case ErrorCode::SizeMismatch: return "size-mismatch";
    case ErrorCode::DegenerateDistribution: return "degenerate-distribution";
    case ErrorCode::SingleClass: return "single-class";
  }
  return "unknown";
}

}  // namespace topohead
