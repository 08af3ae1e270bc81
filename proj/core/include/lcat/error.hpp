#pragma once

#include <stdexcept>
#include <string>

namespace lcat {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid graph construction input (out-of-range edge, broken CSR).
class GraphError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent on-disk data. The message names file and offset.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Operand shapes do not fit the operation.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A parameter outside its valid domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Invalid experiment or training configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Failure during a numerical run (non-finite gradient, reused tape).
class RuntimeFailure : public Error {
 public:
  using Error::Error;
};

}  // namespace lcat
