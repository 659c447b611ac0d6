#pragma once

#include <stdexcept>
#include <string>

namespace linforms {

// Failure categories. The CLI maps these onto its exit-code contract.
enum class ErrorKind {
  InvalidParameter,
  Dimension,
  Degenerate,
  Precondition,
  Parse,
  Resolution,
  Budget,
  Numeric,
};

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

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) fail(kind, what);
}

const char* to_string(ErrorKind kind) noexcept;

}  // namespace linforms
