#pragma once

#include <stdexcept>
#include <string>

namespace frs {

// Invalid user input: bad config values, malformed datasets, out-of-range labels.
// The CLI maps this to exit code 1.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Runtime failures: non-finite gradients, numeric solver breakdown, I/O faults.
// The CLI maps this to exit code 2.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace frs
