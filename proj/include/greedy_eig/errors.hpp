#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace geig {

enum class ErrorCode {
  Structural,
  DegenerateIterate,
  DegenerateDirection,
  KernelFailure,
  IllConditionedGram,
  SingularSystem,
  DegenerateDenominator,
  PoleCollision,
  AdmFailure,
  NuTooSmall,
  ExplicitStepFailure,
  InvalidSpec,
  Parse,
  Version,
  TooLargeForOracle,
};

std::string_view to_string(ErrorCode code);

/// Base of every error raised by the library; `code()` identifies the class.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

template <ErrorCode C>
class TypedError : public Error {
 public:
  explicit TypedError(const std::string& what) : Error(C, what) {}
};

using StructuralError = TypedError<ErrorCode::Structural>;
using DegenerateIterate = TypedError<ErrorCode::DegenerateIterate>;
using DegenerateDirection = TypedError<ErrorCode::DegenerateDirection>;
using KernelFailure = TypedError<ErrorCode::KernelFailure>;
using IllConditionedGram = TypedError<ErrorCode::IllConditionedGram>;
using SingularSystem = TypedError<ErrorCode::SingularSystem>;
using DegenerateDenominator = TypedError<ErrorCode::DegenerateDenominator>;
using PoleCollision = TypedError<ErrorCode::PoleCollision>;
using AdmFailure = TypedError<ErrorCode::AdmFailure>;
using NuTooSmall = TypedError<ErrorCode::NuTooSmall>;
using ExplicitStepFailure = TypedError<ErrorCode::ExplicitStepFailure>;
using InvalidSpec = TypedError<ErrorCode::InvalidSpec>;
using VersionError = TypedError<ErrorCode::Version>;
using TooLargeForOracle = TypedError<ErrorCode::TooLargeForOracle>;

class ParseError : public TypedError<ErrorCode::Parse> {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : TypedError(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

}  // namespace geig
