// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace gn {

// Error taxonomy surfaced through the C API and the CLI exit codes.
enum class ErrorKind {
  kConfig,      // bad configuration / constraint definition
  kData,        // dataset, schema or file-format problems
  kSolver,      // solver missing, crashed, or spoke garbage
  kInfeasible,  // no feasible model exists (initialization failed)
  kInternal,    // invariant breakage, numeric overflow
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg)
      : std::runtime_error(msg), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& msg) {
  throw Error(kind, msg);
}

inline double now_seconds() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

}  // namespace gn
