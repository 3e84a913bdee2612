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

#include <functional>
#include <optional>
#include <utility>

#include "nhimpact/geometry.hpp"

namespace nhimpact {

// Affine constraints in velocity form J(q) qdot + mu0(q) = 0. In momentum
// form the fiber over q is C_q = { p : J G p + mu0 = 0 }.
class AffineConstraintSet {
 public:
  using RowsField = std::function<Matrix(const Vector&)>;
  using AffineField = std::function<Vector(const Vector&)>;

  AffineConstraintSet(int n, int m, RowsField rows, AffineField affine);

  static AffineConstraintSet none(int n);
  static AffineConstraintSet constant(const Matrix& rows);
  static AffineConstraintSet constant(const Matrix& rows, const Vector& affine);

  int dimension() const { return n_; }
  int count() const { return m_; }

  Matrix rows_at(const Vector& q) const;
  Vector affine_at(const Vector& q) const;
  bool is_linear_at(const Vector& q, double tol = 1e-14) const;

  // Appends one velocity row (affine part supplied or zero).
  AffineConstraintSet with_row(CovectorField row,
                               ScalarField affine = {}) const;

 private:
  int n_;
  int m_;
  RowsField rows_;
  AffineField affine_;
};

// Everything the projector formulas need at one configuration.
struct CompatibilityData {
  Matrix rows;      // J, m x n
  Vector affine;    // mu0, m
  Matrix cometric;  // G = g^-1, n x n
  Matrix B;         // J G J^t
  Matrix B_inverse;
  double condition = 1.0;
};

// Critical hypersurface N = f^-1(0).
struct CriticalSurface {
  ScalarField f;
  std::optional<CovectorField> gradient;

  double value(const Vector& q) const { return f(q); }
  // Analytic gradient when present, central differences otherwise.
  Vector gradient_at(const Vector& q) const;
};

CompatibilityData compatibility(const MechanicalSystem& system,
                                const AffineConstraintSet& constraints,
                                const Vector& q);

// Q(x) = J^t B^-1 J G x.
Vector project_Q(const MechanicalSystem& system,
                 const AffineConstraintSet& constraints, const Vector& q,
                 const Vector& x);
// P(x) = x - Q(x).
Vector project_P(const MechanicalSystem& system,
                 const AffineConstraintSet& constraints, const Vector& q,
                 const Vector& x);

// Matrix forms acting on covector columns.
Matrix projector_Q_matrix(const CompatibilityData& data);
Matrix projector_P_matrix(const CompatibilityData& data);

// Q(Upsilon) = -J^t B^-1 mu0, the displacement part of every focusing point.
Vector affine_offset(const MechanicalSystem& system,
                     const AffineConstraintSet& constraints, const Vector& q);
Vector affine_offset(const CompatibilityData& data);

// P(p) + Q(Upsilon): the unique point of C_q associated with u.
PhasePoint focusing_point(const MechanicalSystem& system,
                          const AffineConstraintSet& constraints,
                          const PhasePoint& u);

// J G p + mu0.
Vector constraint_residual(const MechanicalSystem& system,
                           const AffineConstraintSet& constraints,
                           const PhasePoint& x);

// Adds d_qf(qdot) = 0. Each evaluation of the new rows checks that the
// appended row is independent of the existing ones.
AffineConstraintSet trace_constraints(const AffineConstraintSet& constraints,
                                      const CriticalSurface& surface);

// (P^inst(x), Q^inst(x)) for an instantaneous set along N.
std::pair<Vector, Vector> instantaneous_projectors(
    const MechanicalSystem& system, const AffineConstraintSet& instantaneous,
    const Vector& q, const Vector& x);

// Numerical rank with relative singular-value tolerance.
int numerical_rank(const Matrix& rows, double rel_tol = 1e-10);

}  // namespace nhimpact
