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

#include <algorithm>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "nhimpact/types.hpp"

namespace nhimpact {

// Coordinate chart of the configuration space. Angular coordinates are
// flagged so outputs can wrap them; dynamics never wraps.
class ConfigChart {
 public:
  explicit ConfigChart(std::vector<std::string> names,
                       std::vector<bool> wrap_flags = {});

  // Chart with coordinates named q1..qn and no angular coordinates.
  static ConfigChart numbered(int n);

  int dimension() const { return static_cast<int>(names_.size()); }
  const std::vector<std::string>& names() const { return names_; }
  const std::vector<bool>& wrap_flags() const { return wrap_; }
  int index_of(const std::string& name) const;  // -1 if absent

  // Angular entries mapped into (-pi, pi].
  Vector wrap_for_output(const Vector& q) const;

 private:
  std::vector<std::string> names_;
  std::vector<bool> wrap_;
};

using MatrixField = std::function<Matrix(const Vector&)>;
using ScalarField = std::function<double(const Vector&)>;
using CovectorField = std::function<Vector(const Vector&)>;
using MatrixDerivativeField = std::function<std::vector<Matrix>(const Vector&)>;

// Mechanical Hamiltonian H = 1/2 G(p,p) + V(q) with G the inverse of the
// kinetic-energy metric g.
struct MechanicalSystem {
  ConfigChart chart;
  MatrixField metric;
  ScalarField potential;
  // Optional analytic dg/dq^c, one n x n matrix per coordinate.
  std::optional<MatrixDerivativeField> metric_derivative;
  // Optional analytic dV/dq.
  std::optional<CovectorField> potential_gradient;
  // cond(g) above this bound is reported as a singular metric.
  double condition_bound = 1e12;

  int dimension() const { return chart.dimension(); }

  // Constant metric, zero potential unless given. Derivatives are supplied
  // analytically.
  static MechanicalSystem with_constant_metric(
      ConfigChart chart, const Matrix& g, ScalarField potential = {},
      std::optional<CovectorField> potential_gradient = std::nullopt);
};

struct PhasePoint {
  Vector q;
  Vector p;

  int dimension() const { return static_cast<int>(q.size()); }
  bool is_finite() const { return q.allFinite() && p.allFinite(); }
};

Matrix cometric_at(const MechanicalSystem& system, const Vector& q);

double kinetic_energy(const MechanicalSystem& system, const PhasePoint& x);
double hamiltonian(const MechanicalSystem& system, const PhasePoint& x);

// Momentum to velocity, v = G(q) p.
Vector anti_legendre(const MechanicalSystem& system, const PhasePoint& x);
// Velocity to momentum, p = g(q) v.
Vector legendre(const MechanicalSystem& system, const Vector& q,
                const Vector& v);

// dg/dq^c for c = 0..n-1. Central differences with
// h = 1e-6 max(1, |q|_inf) when no analytic derivative is present.
std::vector<Matrix> metric_derivative_at(const MechanicalSystem& system,
                                         const Vector& q);
Vector potential_gradient_at(const MechanicalSystem& system, const Vector& q);

// Step used by every central difference in configuration space.
inline double config_fd_step(const Vector& q) {
  return 1e-6 * std::max(1.0, q.size() ? q.cwiseAbs().maxCoeff() : 0.0);
}

}  // namespace nhimpact
