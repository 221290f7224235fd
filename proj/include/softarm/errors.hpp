// Copyright 2026 The softarm Authors
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

namespace softarm {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Non-finite or exploding simulation state.
class SimulationDiverged : public Error {
 public:
  using Error::Error;
};

/// Correlation window does not cover an integer number of periods.
class SpectralLeakage : public Error {
 public:
  using Error::Error;
};

/// Least-squares problem too ill-conditioned to trust.
class FitFailed : public Error {
 public:
  FitFailed(const std::string& what, double condition)
      : Error(what + " (condition estimate " + std::to_string(condition) + ")"),
        condition_(condition) {}

  double condition() const noexcept { return condition_; }

 private:
  double condition_;
};

/// Fitted model cannot be factored into the physical structure.
class StructureMismatch : public Error {
 public:
  using Error::Error;
};

class NumericalConditioning : public Error {
 public:
  NumericalConditioning(const std::string& what, double condition)
      : Error(what + " (condition estimate " + std::to_string(condition) + ")"),
        condition_(condition) {}

  double condition() const noexcept { return condition_; }

 private:
  double condition_;
};

}  // namespace softarm
