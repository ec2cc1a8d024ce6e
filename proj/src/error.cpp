#include "qnet/error.hpp"

namespace qnet {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidLabel: return "InvalidLabel";
    case ErrorCode::ZeroState: return "ZeroState";
    case ErrorCode::UnknownSite: return "UnknownSite";
    case ErrorCode::NotUnitary: return "NotUnitary";
    case ErrorCode::NotBijection: return "NotBijection";
    case ErrorCode::SiteClash: return "SiteClash";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::LayoutMismatch: return "LayoutMismatch";
    case ErrorCode::NotSeparable: return "NotSeparable";
    case ErrorCode::Syntax: return "Syntax";
    case ErrorCode::UnknownDevice: return "UnknownDevice";
    case ErrorCode::DuplicateDevice: return "DuplicateDevice";
    case ErrorCode::DuplicateEdge: return "DuplicateEdge";
    case ErrorCode::SelfLoop: return "SelfLoop";
    case ErrorCode::Disconnected: return "Disconnected";
    case ErrorCode::BadAssignment: return "BadAssignment";
    case ErrorCode::DuplicateTarget: return "DuplicateTarget";
    case ErrorCode::UnknownOp: return "UnknownOp";
    case ErrorCode::ResourceConsumed: return "ResourceConsumed";
    case ErrorCode::RoutingInconsistency: return "RoutingInconsistency";
    case ErrorCode::RangeError: return "RangeError";
    case ErrorCode::BadFixture: return "BadFixture";
    case ErrorCode::UnknownFixture: return "UnknownFixture";
  }
  return "Unknown";
}

namespace {
std::string decorate(ErrorCode code, const std::string& message, std::size_t line) {
  std::string out(to_string(code));
  if (line != 0) {
    out += " at line " + std::to_string(line);
  }
  out += ": " + message;
  return out;
}
}  // namespace

Error::Error(ErrorCode code, const std::string& message, std::size_t line)
    : std::runtime_error(decorate(code, message, line)), code_(code), detail_(message), line_(line) {}

}  // namespace qnet
