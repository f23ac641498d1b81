#pragma once

#include <stdexcept>
#include <string>

namespace mblw {

enum class ErrorKind {
  InvalidArgument,
  SizeMismatch,
  Integrator,
  Convergence,
  Io,
  Config,
  Mismatch,
  RunFailed,
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

}  // namespace mblw
