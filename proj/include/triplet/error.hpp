#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace triplet {

// Base for every error the library raises.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad caller input: dimensions that disagree, out-of-range parameters.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public InvalidArgument {
 public:
  DimensionMismatch(std::size_t lhs, std::size_t rhs)
      : InvalidArgument("dimension mismatch: " + std::to_string(lhs) + " vs " +
                        std::to_string(rhs)) {}
};

// Numeric failures: a vector that cannot be normalized, an undefined gamma.
class NumericError : public Error {
 public:
  using Error::Error;
};

class DegenerateVector : public NumericError {
 public:
  DegenerateVector() : NumericError("degenerate vector: norm below 1e-12") {}
};

class UndefinedGamma : public NumericError {
 public:
  UndefinedGamma()
      : NumericError("gamma undefined: positive or negative is colinear with the anchor") {}
};

// Mining needs at least two classes in a batch.
class NoNegatives : public InvalidArgument {
 public:
  NoNegatives() : InvalidArgument("batch has a single class; no negatives to mine") {}
};

// File-system failures.
class IoError : public Error {
 public:
  using Error::Error;
};

// Malformed data files. line() is 1-based; 0 when the file as a whole is bad.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace triplet
