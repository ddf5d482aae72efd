#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace curvesurvey {

// Base of every error raised by the library; the CLI catches this type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class OutOfRangeError : public Error {
 public:
  using Error::Error;
};

class InvalidArgumentError : public Error {
 public:
  using Error::Error;
};

// Some stratum has n_h < 2: a second-order inclusion probability vanishes and
// the HT variance estimator is undefined.
class VarianceInestimableError : public Error {
 public:
  using Error::Error;
};

class DegenerateStratumError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class EnumerationLimitError : public Error {
 public:
  EnumerationLimitError(long double count, long double limit)
      : Error("design has " + std::to_string(static_cast<double>(count)) +
              " samples, enumeration limit is " +
              std::to_string(static_cast<std::uint64_t>(limit))),
        count_(count) {}

  long double count() const noexcept { return count_; }

 private:
  long double count_;
};

}  // namespace curvesurvey
