#pragma once

#include <stdexcept>
#include <string>

namespace cohset {

/// A computation produced non-finite values (blow-up, under-resolution).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A degenerate or otherwise unusable result, e.g. an empty coherent set.
class DegenerateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace cohset
