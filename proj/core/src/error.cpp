#include "leafwise/error.hpp"

namespace leafwise {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::DegenerateInput: return "degenerate-input";
    case ErrorKind::Precondition: return "precondition";
    case ErrorKind::Inversion: return "inversion";
    case ErrorKind::JiggleFailure: return "jiggle-failure";
    case ErrorKind::GeneralPosition: return "general-position";
    case ErrorKind::RadiiTooLarge: return "radii-too-large";
    case ErrorKind::ModelConsistency: return "model-consistency";
    case ErrorKind::Generation: return "generation";
    case ErrorKind::Estimation: return "estimation";
    case ErrorKind::Tracing: return "tracing";
    case ErrorKind::Io: return "io";
    case ErrorKind::Parse: return "parse";
  }
  return "unknown";
}

Error::Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace leafwise
