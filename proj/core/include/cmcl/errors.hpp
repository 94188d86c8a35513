// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace cmcl {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand dimensions do not agree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Caller-supplied data is invalid (non-finite values, out-of-range labels).
class InputError : public Error {
 public:
  using Error::Error;
};

/// A configuration value violates its documented range.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// The optimizer was handed a non-finite gradient.
class OptimizerError : public Error {
 public:
  using Error::Error;
};

/// Gradient checking could not run (for example the objective is not deterministic).
class CheckError : public Error {
 public:
  using Error::Error;
};

/// Malformed delimited text input. The message carries the line number.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// A checkpoint or report could not be read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace cmcl
