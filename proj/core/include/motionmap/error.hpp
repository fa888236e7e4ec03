// Copyright 2026 The MotionMap Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace motionmap {

// Base class for every error raised by the library. Callers that only care
// about "something went wrong" catch this; the subclasses below let tests and
// the CLI distinguish the failure kinds the interfaces promise.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Array dimensions disagree (topology mismatch, wrong frame count, ...).
class ShapeError : public Error {
 public:
  using Error::Error;
};

// A value is out of its declared domain (NaN, negative threshold, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Malformed or incompatible on-disk data.
class FormatError : public Error {
 public:
  using Error::Error;
};

class VersionError : public FormatError {
 public:
  using FormatError::FormatError;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Training produced a non-finite loss or parameter.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

// A codebook query found no populated cell within the fallback radius.
class LookupError : public Error {
 public:
  using Error::Error;
};

}  // namespace motionmap
