#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hklab {

/// Failure categories raised by the library. Divergences that are
/// legitimately infinite are returned as +inf, not raised.
enum class ErrorKind {
  BadParams,
  ZeroMass,
  SupportMismatch,
  NegativeInput,
  NotProbability,
  OutOfRange,
  LogOfZero,
  Unstable,
  InsufficientData,
  NonPositiveValues,
  ZeroDivergence,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::BadParams: return "BadParams";
    case ErrorKind::ZeroMass: return "ZeroMass";
    case ErrorKind::SupportMismatch: return "SupportMismatch";
    case ErrorKind::NegativeInput: return "NegativeInput";
    case ErrorKind::NotProbability: return "NotProbability";
    case ErrorKind::OutOfRange: return "OutOfRange";
    case ErrorKind::LogOfZero: return "LogOfZero";
    case ErrorKind::Unstable: return "Unstable";
    case ErrorKind::InsufficientData: return "InsufficientData";
    case ErrorKind::NonPositiveValues: return "NonPositiveValues";
    case ErrorKind::ZeroDivergence: return "ZeroDivergence";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void raise(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace hklab
