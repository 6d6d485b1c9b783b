#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace leafwise {

enum class ErrorKind {
  DegenerateInput,
  Precondition,
  Inversion,
  JiggleFailure,
  GeneralPosition,
  RadiiTooLarge,
  ModelConsistency,
  Generation,
  Estimation,
  Tracing,
  Io,
  Parse,
};

std::string_view to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what);
  [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& what);

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) fail(kind, what);
}

}  // namespace leafwise
