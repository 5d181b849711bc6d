// Apache License, Version 2.0, refer to LICENSE.txt.

#pragma once

#include <stdexcept>
#include <string>

namespace latrec {

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed input text. Carries a 1-based line number when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& msg, long line = 0)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + msg : msg),
        line_(line) {}
  long line() const { return line_; }

 private:
  long line_;
};

// Data violates a documented invariant (out-of-range ids, duplicate
// triples, inconsistent query sets, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Shape mismatch between factors, features, and indices.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Bad binary container: wrong magic, unsupported version, truncation.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Missing or unreadable file. The message always names the path.
class IoError : public Error {
 public:
  using Error::Error;
};

// Numerical failure during fitting (non-finite likelihood, singular
// posterior). The message names the offending block.
class TrainingError : public Error {
 public:
  using Error::Error;
};

}  // namespace latrec
