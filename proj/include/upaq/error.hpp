//
// Copyright 2026 The upaq Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <stdexcept>
#include <string>

namespace upaq {

// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// File could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

// Bytes on disk do not follow the container layout (bad magic, truncated
// blob, unknown version).
class FormatError : public Error {
 public:
  using Error::Error;
};

// A model, profile or input violates a structural invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// An argument is outside the domain of an operation.
class ParameterError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

}  // namespace upaq
