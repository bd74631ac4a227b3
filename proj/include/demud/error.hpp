#pragma once

#include <stdexcept>
#include <string>

namespace demud {

/// Malformed or invalid input data: non-finite values, bad file formats,
/// inconsistent ids or labels.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes that do not agree (vector length vs. model dimension).
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A caller-supplied parameter outside its allowed range.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// File system failures (unreadable input, unwritable output).
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace demud
