#pragma once

#include <stdexcept>
#include <string>

namespace hhr {

// Bad user input: malformed files, out-of-range ids, shape mismatches in
// configs. The CLI maps this to exit code 1.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Internal invariant violation (non-finite values on the tape, divergence).
// The CLI maps this to exit code 2.
class InternalError : public std::runtime_error {
 public:
  explicit InternalError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace hhr
