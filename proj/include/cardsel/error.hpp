#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cardsel {

enum class ErrorKind {
  InvalidInput,   ///< malformed or out-of-contract input data
  Infeasible,     ///< constraint set admits no portfolio
  LimitExceeded,  ///< configured ceiling (enumeration size, retries) hit
  Io,             ///< filesystem / parse failure
  Internal        ///< broken invariant; indicates a bug
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidInput: return "invalid_input";
    case ErrorKind::Infeasible: return "infeasible";
    case ErrorKind::LimitExceeded: return "limit_exceeded";
    case ErrorKind::Io: return "io";
    case ErrorKind::Internal: return "internal";
  }
  return "unknown";
}

/// Single exception type for the toolkit; `kind()` lets callers (and the CLI)
/// map failures to exit codes without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace cardsel
