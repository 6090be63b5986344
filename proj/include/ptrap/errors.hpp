#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ptrap {

enum class ErrorCode {
  InvalidParams,
  UnsupportedGeometry,
  NoElectrodes,
  SolveFailed,
  OutsideDomain,
  UnknownElectrode,
  NullNotFound,
  NotATrap,
  InvalidDirection,
  DegenerateSystem,
  InvalidFrequency,
  Unbounded,
  NoConvergence,
  UnstableChain,
  ConfigNotFound,
  UnknownKey,
  InvalidValue,
  ParseError,
  IoError,
};

std::string_view to_string(ErrorCode code);

/// Domain errors carry a machine-readable code; the CLI maps config-class
/// codes to exit status 2 and everything else to 1.
class TrapError : public std::runtime_error {
 public:
  TrapError(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

  bool is_config_error() const noexcept {
    return code_ == ErrorCode::ConfigNotFound || code_ == ErrorCode::UnknownKey ||
           code_ == ErrorCode::InvalidValue || code_ == ErrorCode::ParseError;
  }

 private:
  ErrorCode code_;
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidParams: return "InvalidParams";
    case ErrorCode::UnsupportedGeometry: return "UnsupportedGeometry";
    case ErrorCode::NoElectrodes: return "NoElectrodes";
    case ErrorCode::SolveFailed: return "SolveFailed";
    case ErrorCode::OutsideDomain: return "OutsideDomain";
    case ErrorCode::UnknownElectrode: return "UnknownElectrode";
    case ErrorCode::NullNotFound: return "NullNotFound";
    case ErrorCode::NotATrap: return "NotATrap";
    case ErrorCode::InvalidDirection: return "InvalidDirection";
    case ErrorCode::DegenerateSystem: return "DegenerateSystem";
    case ErrorCode::InvalidFrequency: return "InvalidFrequency";
    case ErrorCode::Unbounded: return "Unbounded";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::UnstableChain: return "UnstableChain";
    case ErrorCode::ConfigNotFound: return "ConfigNotFound";
    case ErrorCode::UnknownKey: return "UnknownKey";
    case ErrorCode::InvalidValue: return "InvalidValue";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace ptrap
