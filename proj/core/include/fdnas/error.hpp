// Copyright 2026 The FDNAS Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace fdnas {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Precondition violations on caller-supplied arguments.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public ArgumentError {
 public:
  using ArgumentError::ArgumentError;
};

// NaN/Inf encountered in tensors, gradients or losses.
class NumericError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Malformed or truncated file content.
class FormatError : public IoError {
 public:
  using IoError::IoError;
};

}  // namespace fdnas
