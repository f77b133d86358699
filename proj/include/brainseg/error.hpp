#pragma once

#include <stdexcept>
#include <string>

namespace brainseg {

// Failure categories surfaced by every module. The C API maps these
// one-to-one onto bs_status codes.
enum class ErrorKind {
  Format,
  Unsupported,
  Dimension,
  Io,
  Validation,
  Degenerate,
  Singular,
  Config,
  ClassAbsent,
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

}  // namespace brainseg
