#pragma once

#include <stdexcept>
#include <string>

namespace coarsemodel {

enum class ErrorKind {
  invalid_argument,  // violated precondition or malformed input
  numerical,         // singular input, optimizer failure, tolerance breach
  infeasible,        // construction hypothesis not met (e.g. lattice margin)
  degenerate,        // result exists but carries no information (e.g. unreachable class)
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool cond, const std::string& what) {
  if (!cond) fail(ErrorKind::invalid_argument, what);
}

}  // namespace coarsemodel
