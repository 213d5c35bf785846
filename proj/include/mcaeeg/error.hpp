#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mcaeeg {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Window whose sample variance is zero; its differential entropy is -inf.
class DegenerateWindowError : public Error {
 public:
  using Error::Error;
};

/// FastICA ran out of iterations (or hit a rank-deficient input).
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, std::size_t iterations)
      : Error(what), iterations_(iterations) {}
  std::size_t iterations() const noexcept { return iterations_; }

 private:
  std::size_t iterations_;
};

class RankError : public Error {
 public:
  using Error::Error;
};

/// Malformed, truncated or unsupported file.
class FormatError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace mcaeeg
