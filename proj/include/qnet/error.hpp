#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace qnet {

enum class ErrorCode {
  InvalidArgument,
  InvalidLabel,
  ZeroState,
  UnknownSite,
  NotUnitary,
  NotBijection,
  SiteClash,
  DimMismatch,
  LayoutMismatch,
  NotSeparable,
  Syntax,
  UnknownDevice,
  DuplicateDevice,
  DuplicateEdge,
  SelfLoop,
  Disconnected,
  BadAssignment,
  DuplicateTarget,
  UnknownOp,
  ResourceConsumed,
  RoutingInconsistency,
  RangeError,
  BadFixture,
  UnknownFixture,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library. `line()` is nonzero for diagnostics
/// that come from parsing a text file.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::size_t line = 0);

  ErrorCode code() const noexcept { return code_; }
  std::size_t line() const noexcept { return line_; }
  /// Message without the code and line decoration.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
  std::size_t line_;
};

}  // namespace qnet
