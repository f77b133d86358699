#include "brainseg/error.hpp"

namespace brainseg {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Format: return "FormatError";
    case ErrorKind::Unsupported: return "UnsupportedError";
    case ErrorKind::Dimension: return "DimensionError";
    case ErrorKind::Io: return "IoError";
    case ErrorKind::Validation: return "ValidationError";
    case ErrorKind::Degenerate: return "DegenerateError";
    case ErrorKind::Singular: return "SingularError";
    case ErrorKind::Config: return "ConfigError";
    case ErrorKind::ClassAbsent: return "ClassAbsent";
  }
  return "Error";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

}  // namespace brainseg
