// Copyright 2026 The prior-forge Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace prior_forge {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: bad grids, mismatched domains, unparseable files.
class InputError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A documented precondition (e.g. a proper hypothesis posterior) failed.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Overflow, non-finite integrands, or a quadrature that failed to settle.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// A density whose integral diverges was asked to be normalized.
class ImproperDensity : public Error {
 public:
  using Error::Error;
};

/// A result contradicts a theorem the library relies on. Never swallowed.
class ConsistencyError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace prior_forge
