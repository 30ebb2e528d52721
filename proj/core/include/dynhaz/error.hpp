#pragma once

#include <stdexcept>
#include <string>

namespace dynhaz {

// All recoverable failures in the library throw this type. The message
// starts with a stable machine-matchable token ("empty window",
// "insufficient window", ...) followed by context.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace dynhaz
