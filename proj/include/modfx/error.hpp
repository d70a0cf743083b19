#pragma once

#include <stdexcept>
#include <string>

namespace modfx {

// Bad caller input: out-of-range sizes, inconsistent shapes, unknown enum names.
class InvalidArgument : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

// Problems with external data: unreadable files, malformed params, mismatched
// recordings, silent targets.
class DataError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Numerical failure: unstable filters, near-singular feedback, NaN/Inf during
// training or rendering.
class NumericError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class InstabilityError : public NumericError {
public:
  using NumericError::NumericError;
};

class DegenerateError : public DataError {
public:
  using DataError::DataError;
};

} // namespace modfx
