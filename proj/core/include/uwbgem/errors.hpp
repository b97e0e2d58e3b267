// SPDX-License-Identifier: Apache-2.0
//
// uwbgem: UWB ranging error mitigation with weakly supervised GEM training
// Copyright (C) 2026 the uwbgem authors
//
// Licensed under the Apache License, Version 2.0; see LICENSE in the
// repository root for details.

#ifndef UWBGEM_ERRORS_HPP_
#define UWBGEM_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace uwbgem {

/// Base class for all errors raised by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller-supplied value violates a documented precondition.
class InvalidArgumentError : public Error {
 public:
  using Error::Error;
};

/// Tensor/vector dimensions do not chain.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// An object is used before (or after) the state its contract requires.
class InvalidStateError : public Error {
 public:
  using Error::Error;
};

/// A waveform carries no detectable signal (e.g. all-zero CIR).
class NoSignalError : public Error {
 public:
  using Error::Error;
};

/// A path delay falls outside the CIR observation window.
class OutOfWindowError : public Error {
 public:
  using Error::Error;
};

/// A file does not match its documented schema.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Filesystem-level failure (open, write, rename).
class IoError : public Error {
 public:
  using Error::Error;
};

/// A numeric routine failed beyond its stated regularization.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace uwbgem

#endif  // UWBGEM_ERRORS_HPP_
