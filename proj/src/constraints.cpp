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

#include "nhimpact/constraints.hpp"

#include <string>

namespace nhimpact {

AffineConstraintSet::AffineConstraintSet(int n, int m, RowsField rows,
                                         AffineField affine)
    : n_(n), m_(m), rows_(std::move(rows)), affine_(std::move(affine)) {
  if (n < 1) throw ConfigError("constraint set needs n >= 1");
  if (m < 0 || m > n)
    throw ConfigError("constraint count must satisfy 0 <= m <= n");
}

AffineConstraintSet AffineConstraintSet::none(int n) {
  return AffineConstraintSet(
      n, 0, [n](const Vector&) { return Matrix(0, n); },
      [](const Vector&) { return Vector(0); });
}

AffineConstraintSet AffineConstraintSet::constant(const Matrix& rows) {
  return constant(rows, Vector::Zero(rows.rows()));
}

AffineConstraintSet AffineConstraintSet::constant(const Matrix& rows,
                                                  const Vector& affine) {
  if (affine.size() != rows.rows())
    throw ConfigError("affine part size does not match row count");
  return AffineConstraintSet(
      static_cast<int>(rows.cols()), static_cast<int>(rows.rows()),
      [rows](const Vector&) { return rows; },
      [affine](const Vector&) { return affine; });
}

Matrix AffineConstraintSet::rows_at(const Vector& q) const {
  Matrix J = rows_(q);
  if (J.rows() != m_ || J.cols() != n_)
    throw RankDeficiencyError("constraints", "constraint rows have wrong shape");
  return J;
}

Vector AffineConstraintSet::affine_at(const Vector& q) const {
  Vector a = affine_(q);
  if (a.size() != m_)
    throw RankDeficiencyError("constraints", "affine part has wrong size");
  return a;
}

bool AffineConstraintSet::is_linear_at(const Vector& q, double tol) const {
  return m_ == 0 || affine_at(q).cwiseAbs().maxCoeff() <= tol;
}

AffineConstraintSet AffineConstraintSet::with_row(CovectorField row,
                                                  ScalarField affine) const {
  const int n = n_;
  const int m = m_;
  auto rows = [base = rows_, row = std::move(row), n, m](const Vector& q) {
    Matrix J(m + 1, n);
    J.topRows(m) = base(q);
    J.row(m) = row(q).transpose();
    return J;
  };
  auto aff = [base = affine_, affine = std::move(affine), m](const Vector& q) {
    Vector a(m + 1);
    a.head(m) = base(q);
    a[m] = affine ? affine(q) : 0.0;
    return a;
  };
  return AffineConstraintSet(n, m + 1, std::move(rows), std::move(aff));
}

Vector CriticalSurface::gradient_at(const Vector& q) const {
  if (gradient) return (*gradient)(q);
  const double h = config_fd_step(q);
  Vector grad(q.size());
  for (Eigen::Index c = 0; c < q.size(); ++c) {
    Vector plus = q, minus = q;
    plus[c] += h;
    minus[c] -= h;
    grad[c] = (f(plus) - f(minus)) / (2.0 * h);
  }
  return grad;
}

int numerical_rank(const Matrix& rows, double rel_tol) {
  if (rows.rows() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(rows);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s[0] == 0.0) return 0;
  int rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s[i] > rel_tol * s[0]) ++rank;
  return rank;
}

CompatibilityData compatibility(const MechanicalSystem& system,
                                const AffineConstraintSet& constraints,
                                const Vector& q) {
  CompatibilityData data;
  data.cometric = cometric_at(system, q);
  data.rows = constraints.rows_at(q);
  data.affine = constraints.affine_at(q);
  const int m = constraints.count();
  if (m == 0) {
    data.B = Matrix(0, 0);
    data.B_inverse = Matrix(0, 0);
    return data;
  }
  if (!data.rows.allFinite() || !data.affine.allFinite())
    throw CompatibilityError("compatibility", "non-finite constraint data");
  if (numerical_rank(data.rows) < m)
    throw RankDeficiencyError("compatibility",
                              "constraint rows are linearly dependent");
  Matrix B = data.rows * data.cometric * data.rows.transpose();
  B = 0.5 * (B + B.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(B, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 1e-10 * hi))
    throw CompatibilityError("compatibility",
                             "matrix J G J^t is numerically singular");
  data.B = B;
  Matrix inv = B.llt().solve(Matrix::Identity(m, m));
  data.B_inverse = 0.5 * (inv + inv.transpose());
  data.condition = hi / lo;
  return data;
}

Matrix projector_Q_matrix(const CompatibilityData& data) {
  const auto n = data.cometric.rows();
  if (data.rows.rows() == 0) return Matrix::Zero(n, n);
  return data.rows.transpose() * data.B_inverse * data.rows * data.cometric;
}

Matrix projector_P_matrix(const CompatibilityData& data) {
  const auto n = data.cometric.rows();
  return Matrix::Identity(n, n) - projector_Q_matrix(data);
}

Vector project_Q(const MechanicalSystem& system,
                 const AffineConstraintSet& constraints, const Vector& q,
                 const Vector& x) {
  const CompatibilityData data = compatibility(system, constraints, q);
  if (constraints.count() == 0) return Vector::Zero(x.size());
  return data.rows.transpose() *
         (data.B_inverse * (data.rows * (data.cometric * x)));
}

Vector project_P(const MechanicalSystem& system,
                 const AffineConstraintSet& constraints, const Vector& q,
                 const Vector& x) {
  return x - project_Q(system, constraints, q, x);
}

Vector affine_offset(const CompatibilityData& data) {
  if (data.rows.rows() == 0) return Vector::Zero(data.cometric.rows());
  return -data.rows.transpose() * (data.B_inverse * data.affine);
}

Vector affine_offset(const MechanicalSystem& system,
                     const AffineConstraintSet& constraints, const Vector& q) {
  return affine_offset(compatibility(system, constraints, q));
}

PhasePoint focusing_point(const MechanicalSystem& system,
                          const AffineConstraintSet& constraints,
                          const PhasePoint& u) {
  const CompatibilityData data = compatibility(system, constraints, u.q);
  if (constraints.count() == 0) return u;
  const Vector q_part = data.rows.transpose() *
                        (data.B_inverse * (data.rows * (data.cometric * u.p)));
  return PhasePoint{u.q, u.p - q_part + affine_offset(data)};
}

Vector constraint_residual(const MechanicalSystem& system,
                           const AffineConstraintSet& constraints,
                           const PhasePoint& x) {
  if (constraints.count() == 0) return Vector(0);
  return constraints.rows_at(x.q) * anti_legendre(system, x) +
         constraints.affine_at(x.q);
}

AffineConstraintSet trace_constraints(const AffineConstraintSet& constraints,
                                      const CriticalSurface& surface) {
  const int m = constraints.count();
  auto checked_row = [constraints, surface, m](const Vector& q) {
    Vector df = surface.gradient_at(q);
    Matrix augmented(m + 1, q.size());
    augmented.topRows(m) = constraints.rows_at(q);
    augmented.row(m) = df.transpose();
    if (numerical_rank(augmented) < m + 1)
      throw TransversalityError(
          "trace_constraints",
          "surface gradient lies in the span of the constraint rows");
    return df;
  };
  if (m + 1 > constraints.dimension())
    throw TransversalityError("trace_constraints",
                              "no room for the trace row (m = n)");
  return constraints.with_row(std::move(checked_row));
}

std::pair<Vector, Vector> instantaneous_projectors(
    const MechanicalSystem& system, const AffineConstraintSet& instantaneous,
    const Vector& q, const Vector& x) {
  Vector Qx = project_Q(system, instantaneous, q, x);
  return {x - Qx, Qx};
}

}  // namespace nhimpact
