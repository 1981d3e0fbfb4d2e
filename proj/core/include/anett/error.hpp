#pragma once

#include <stdexcept>
#include <string>

namespace anett {

// Operand shapes disagree (grid sizes, geometry vs. image, descriptor vs. params).
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A numerical routine produced NaN/Inf and cannot continue.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Missing or unreadable input file.
class FileNotFoundError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace anett
