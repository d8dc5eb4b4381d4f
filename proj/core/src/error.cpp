#include "fnf/error.hpp"

namespace fnf {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::MissingFile: return "MissingFile";
    case ErrorKind::SizeMismatch: return "SizeMismatch";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::BadManifest: return "BadManifest";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::Io: return "Io";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::RankDeficient: return "RankDeficient";
    case ErrorKind::KOutOfRange: return "KOutOfRange";
    case ErrorKind::BadWhitening: return "BadWhitening";
    case ErrorKind::ThresholdDegenerate: return "ThresholdDegenerate";
    case ErrorKind::EmptyMask: return "EmptyMask";
    case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::TooShort: return "TooShort";
    case ErrorKind::SampleCountMismatch: return "SampleCountMismatch";
    case ErrorKind::TokenCountMismatch: return "TokenCountMismatch";
    case ErrorKind::ZeroVariance: return "ZeroVariance";
    case ErrorKind::BothEmpty: return "BothEmpty";
    case ErrorKind::InvalidScenario: return "InvalidScenario";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

int exit_code(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::MissingFile:
    case ErrorKind::SizeMismatch:
    case ErrorKind::NonFinite:
    case ErrorKind::BadManifest:
    case ErrorKind::ShapeMismatch:
    case ErrorKind::Io:
    case ErrorKind::KOutOfRange:
    case ErrorKind::InvalidScenario:
    case ErrorKind::InvalidArgument:
      return 2;
    case ErrorKind::DimensionMismatch:
    case ErrorKind::IndexOutOfRange:
    case ErrorKind::LengthMismatch:
    case ErrorKind::SampleCountMismatch:
    case ErrorKind::TokenCountMismatch:
      return 3;
    case ErrorKind::RankDeficient:
    case ErrorKind::BadWhitening:
    case ErrorKind::ThresholdDegenerate:
    case ErrorKind::EmptyMask:
    case ErrorKind::TooShort:
    case ErrorKind::ZeroVariance:
    case ErrorKind::BothEmpty:
      return 4;
  }
  return 4;
}

}  // namespace fnf
