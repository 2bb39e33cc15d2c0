#pragma once

#include <stdexcept>
#include <string>

namespace fer {

/// Malformed or inconsistent input data (files, manifests, labels).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Text-format parse failure; the message carries the offending line number.
class ParseError : public DataError {
 public:
  ParseError(const std::string& what, int line)
      : DataError(what + " (line " + std::to_string(line) + ")"), detail_(what), line_(line) {}
  int line() const noexcept { return line_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  std::string detail_;
  int line_;
};

/// A numerical routine could not produce a valid result
/// (singular scatter, non-convergence, degenerate data).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fer
