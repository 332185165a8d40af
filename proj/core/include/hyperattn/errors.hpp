#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hyperattn {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on arguments (shapes, parameter ranges) was violated.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// An exponent exceeded the safe range. Re-run with a larger global shift.
class ExpOverflow : public Error {
 public:
  ExpOverflow(std::size_t row, std::size_t col, double exponent)
      : Error("exp overflow at (" + std::to_string(row) + ", " + std::to_string(col) +
              "): exponent " + std::to_string(exponent) +
              " exceeds the safe limit; raise the global shift"),
        row_(row),
        col_(col),
        exponent_(exponent) {}

  std::size_t row() const noexcept { return row_; }
  std::size_t col() const noexcept { return col_; }
  double exponent() const noexcept { return exponent_; }

 private:
  std::size_t row_;
  std::size_t col_;
  double exponent_;
};

/// Largest exponent passed to exp() anywhere in the library.
inline constexpr double kMaxExponent = 700.0;

}  // namespace hyperattn
