#pragma once

#include <stdexcept>
#include <string>

namespace ntnf {

enum class ErrorKind {
  invalid_argument,
  out_of_window,
  singular,
  range,
  parse,
  resonance,
  gap,
  conditioning,
  window_too_small,
  divergence,
  inconsistency,
  overlap,
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::invalid_argument: return "invalid-argument";
    case ErrorKind::out_of_window: return "out-of-window";
    case ErrorKind::singular: return "singular";
    case ErrorKind::range: return "range";
    case ErrorKind::parse: return "parse";
    case ErrorKind::resonance: return "resonance";
    case ErrorKind::gap: return "gap";
    case ErrorKind::conditioning: return "conditioning";
    case ErrorKind::window_too_small: return "window-too-small";
    case ErrorKind::divergence: return "divergence";
    case ErrorKind::inconsistency: return "inconsistency";
    case ErrorKind::overlap: return "overlap";
  }
  return "unknown";
}

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& what, std::string witness = {})
      : std::runtime_error(what), kind_(kind), witness_(std::move(witness)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& witness() const noexcept { return witness_; }

  // Failures where the mathematics, not the caller, says no.
  bool mathematical() const noexcept {
    switch (kind_) {
      case ErrorKind::resonance:
      case ErrorKind::gap:
      case ErrorKind::conditioning:
      case ErrorKind::window_too_small:
      case ErrorKind::divergence:
      case ErrorKind::inconsistency:
      case ErrorKind::overlap:
      case ErrorKind::singular:
        return true;
      default:
        return false;
    }
  }

private:
  ErrorKind kind_;
  std::string witness_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what, std::string witness = {}) {
  throw Error(kind, what, std::move(witness));
}

inline void require(bool ok, const std::string& what) {
  if (!ok) fail(ErrorKind::invalid_argument, what);
}

}  // namespace ntnf
