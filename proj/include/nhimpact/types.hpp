// Copyright 2026 The nhimpact Authors.
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

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace nhimpact {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Base of every numerical failure raised by the library. The operation name
// travels with the error so the driver can report which step failed.
// Side of the critical surface: Plus is {f > 0}, Minus is {f < 0}.
enum class Side : int { Minus = -1, Plus = 1 };

constexpr Side opposite(Side s) {
  return s == Side::Plus ? Side::Minus : Side::Plus;
}
constexpr double sign_of(Side s) { return s == Side::Plus ? 1.0 : -1.0; }
inline const char* to_string(Side s) { return s == Side::Plus ? "+" : "-"; }

class NumericalError : public std::runtime_error {
 public:
  NumericalError(std::string operation, const std::string& what)
      : std::runtime_error(operation + ": " + what),
        operation_(std::move(operation)) {}

  const std::string& operation() const noexcept { return operation_; }

 private:
  std::string operation_;
};

class SingularMetricError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class RankDeficiencyError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class CompatibilityError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class TransversalityError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// The admissible-sequence search hit its iteration cap without deciding.
// Distinct from a trapped outcome, which is a valid (empty) result.
class UndecidedError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class StepLimitError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace nhimpact
