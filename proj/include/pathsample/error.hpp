#pragma once

#include <stdexcept>
#include <string>

namespace pathsample {

/// Failure categories. The CLI maps these onto its exit codes.
enum class ErrorKind {
  precondition,  // caller violated a documented precondition
  dimension,     // shapes disagree
  non_finite,    // NaN or infinity in an input
  degenerate,    // zero path variation, empty support, ...
  numeric,       // overflow, non-convergence
  guard,         // enumeration size guard exceeded
  format,        // malformed or unsupported file contents
  io,            // file system failure
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

inline void require(bool condition, ErrorKind kind, const std::string& what) {
  if (!condition) fail(kind, what);
}

}  // namespace pathsample
