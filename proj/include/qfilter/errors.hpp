// Copyright 2026 The qfilter Authors
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

namespace qfilter {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class InvalidModel : public Error {
 public:
  using Error::Error;
};

class InvalidState : public Error {
 public:
  using Error::Error;
};

/// Steady state is not unique (null space of the generator has dimension != 1).
class AmbiguityError : public Error {
 public:
  using Error::Error;
};

/// Jump-time bisection could not resolve the crossing.
class RefinementFailure : public Error {
 public:
  using Error::Error;
};

/// A replayed record demands a jump where the jump rate vanishes.
class ImpossibleOutcome : public Error {
 public:
  using Error::Error;
};

class StepSizeError : public Error {
 public:
  using Error::Error;
};

class BudgetError : public Error {
 public:
  using Error::Error;
};

class GridMismatch : public Error {
 public:
  using Error::Error;
};

class DerivationFailure : public Error {
 public:
  using Error::Error;
};

class SchemaError : public Error {
 public:
  using Error::Error;
};

/// Wraps an integrator failure with the index of the trajectory that raised it.
class TrajectoryError : public Error {
 public:
  TrajectoryError(std::size_t id, const std::string& what)
      : Error("trajectory " + std::to_string(id) + ": " + what), id_(id) {}
  std::size_t trajectory_id() const noexcept { return id_; }

 private:
  std::size_t id_;
};

}  // namespace qfilter
