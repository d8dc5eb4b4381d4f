#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fnf {

enum class ErrorKind {
  // activation_store
  MissingFile,
  SizeMismatch,
  NonFinite,
  BadManifest,
  ShapeMismatch,
  Io,
  // whitening / fastica / networks
  DimensionMismatch,
  RankDeficient,
  KOutOfRange,
  BadWhitening,
  ThresholdDegenerate,
  EmptyMask,
  IndexOutOfRange,
  // similarity
  LengthMismatch,
  TooShort,
  SampleCountMismatch,
  TokenCountMismatch,
  ZeroVariance,
  BothEmpty,
  // synth / cli
  InvalidScenario,
  InvalidArgument,
};

std::string_view to_string(ErrorKind kind) noexcept;

// Process exit status used by the command-line front end for each failure class:
// 2 validation, 3 comparison precondition, 4 numerical failure.
int exit_code(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace fnf
