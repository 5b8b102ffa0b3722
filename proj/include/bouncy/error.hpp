#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bouncy {

/// Failure categories raised by the dynamics, solvers and I/O layers.
enum class ErrorKind {
  ZeroGradient,
  DegenerateStart,
  RootBracketFailure,
  EventStorm,
  Infeasible,
  NotLogConcave,
  Unsupported,
  ParseError,
  EmptyFile,
  NotPSD,
  DegenerateSeries,
  InvalidArgument,
};

constexpr std::string_view kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ZeroGradient: return "ZeroGradient";
    case ErrorKind::DegenerateStart: return "DegenerateStart";
    case ErrorKind::RootBracketFailure: return "RootBracketFailure";
    case ErrorKind::EventStorm: return "EventStorm";
    case ErrorKind::Infeasible: return "Infeasible";
    case ErrorKind::NotLogConcave: return "NotLogConcave";
    case ErrorKind::Unsupported: return "Unsupported";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::EmptyFile: return "EmptyFile";
    case ErrorKind::NotPSD: return "NotPSD";
    case ErrorKind::DegenerateSeries: return "DegenerateSeries";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(kind_name(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline void require(bool condition, const std::string& what) {
  if (!condition) throw Error(ErrorKind::InvalidArgument, what);
}

}  // namespace bouncy
