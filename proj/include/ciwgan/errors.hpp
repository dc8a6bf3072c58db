// Copyright 2026 The ciwgan Authors
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

namespace ciwgan {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor extents disagree. `dimension()` names the offending axis.
class ShapeError : public Error {
 public:
  ShapeError(std::string op, std::string dimension, std::size_t expected, std::size_t actual)
      : Error(op + ": dimension '" + dimension + "' expected " + std::to_string(expected) +
              ", got " + std::to_string(actual)),
        dimension_(std::move(dimension)) {}
  ShapeError(const std::string& op, const std::string& message)
      : Error(op + ": " + message) {}

  const std::string& dimension() const noexcept { return dimension_; }

 private:
  std::string dimension_;
};

/// Invalid configuration or argument. Maps to CLI exit code 2.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// NaN/Inf or a failed numerical procedure. Maps to CLI exit code 3.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Filesystem or format problem. Maps to CLI exit code 4.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace ciwgan
