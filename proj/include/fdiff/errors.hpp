// Copyright 2026 The fdiff Authors.
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

#ifndef FDIFF_ERRORS_HPP
#define FDIFF_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace fdiff {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed arguments: dimension mismatch, points off the manifold, bad counts.
class InvalidInputError : public Error {
 public:
  using Error::Error;
};

/// A log map or parallel transport was requested at (or within 1e-8 of) the cut locus.
class CutLocusError : public Error {
 public:
  using Error::Error;
};

/// A precondition on a real-valued argument does not hold.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A population model or experiment description violates its invariants.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// The expected Hessian operator is (numerically) singular.
class AssumptionViolation : public Error {
 public:
  using Error::Error;
};

/// Generic numerical breakdown (negative covariance eigenvalues, solver abort).
class NumericalFailure : public Error {
 public:
  using Error::Error;
};

}  // namespace fdiff

#endif  // FDIFF_ERRORS_HPP
