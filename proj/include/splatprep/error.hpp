#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace splatprep {

/// Base of every failure raised by the library. Callers that only care about
/// "did the stage fail" catch this; the subclasses carry the category.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed structured input (PLY header, config file, pairs file).
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// File ended before the declared element count was read.
class TruncationError : public Error {
 public:
  using Error::Error;
};

/// Well-formed file carrying an invalid value (e.g. a NaN coordinate).
class DataError : public Error {
 public:
  DataError(const std::string& what, std::size_t index)
      : Error(what + " (vertex " + std::to_string(index) + ")"), index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Precondition violated by the caller.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Point configuration without enough spread to determine a transform.
class DegenerateError : public Error {
 public:
  using Error::Error;
};

/// Robust estimation could not produce a model (too few matches, every
/// sample degenerate).
class EstimationError : public Error {
 public:
  using Error::Error;
};

/// ICP started with no source point inside the correspondence cap.
class NoOverlapError : public Error {
 public:
  using Error::Error;
};

}  // namespace splatprep
