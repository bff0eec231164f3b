#pragma once

#include <stdexcept>
#include <string>

namespace gsps {

// Invalid inputs: bad shapes, out-of-bounds parameters, malformed files.
// Mapped to exit code 1 by the CLI.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Numerical breakdown: singular matrices, non-finite iterates.
// Mapped to exit code 2 by the CLI.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace gsps
