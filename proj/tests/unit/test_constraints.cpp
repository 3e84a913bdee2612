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

#include <gtest/gtest.h>

#include "nhimpact/constraints.hpp"
#include "nhimpact/scenarios.hpp"
#include "test_support.hpp"

namespace nhimpact {
namespace {

constexpr double kR = 1.0;
constexpr double kK2 = 0.4;

MechanicalSystem sphere_system() {
  return rolling_sphere_rough(kR, kK2).system.plus->system;
}

AffineConstraintSet rolling() {
  return AffineConstraintSet::constant(sphere_rolling_rows(kR));
}

double max_abs(const Matrix& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

TEST(Compatibility, EmptySet) {
  const auto data = compatibility(sphere_system(), AffineConstraintSet::none(5),
                                  Vector::Zero(5));
  EXPECT_EQ(data.B.rows(), 0);
}

TEST(Compatibility, SphereAndWheels) {
  const auto s = compatibility(sphere_system(), rolling(), Vector::Zero(5));
  // J G J^t by hand
  const Matrix J = sphere_rolling_rows(kR);
  Vector gd(5);
  gd << 1, 1, 1 / kK2, 1 / kK2, 1 / kK2;
  const Matrix expected = J * gd.asDiagonal() * J.transpose();
  EXPECT_LT(max_abs(s.B - expected), 1e-14);
  EXPECT_NEAR(s.B(0, 0), 3.5, 1e-14);
  EXPECT_NEAR(s.B(1, 1), 3.5, 1e-14);
  EXPECT_NEAR(s.B(0, 1), 0.0, 1e-14);

  const Scenario w = two_wheeled(1.0, 2.0);
  const auto d = compatibility(w.system.plus->system, w.system.plus->constraints,
                               Vector::Zero(4));
  EXPECT_NEAR(d.B(0, 0), 2.0, 1e-14);
  EXPECT_NEAR(d.B(1, 1), 5.0, 1e-14);
  EXPECT_NEAR(d.B(0, 1), 0.0, 1e-14);
}

TEST(Compatibility, DependentRowsRejected) {
  Matrix J(2, 3);
  J << 1, 2, 3,
       2, 4, 6;
  const auto sys = MechanicalSystem::with_constant_metric(
      ConfigChart::numbered(3), Matrix::Identity(3, 3));
  EXPECT_THROW(compatibility(sys, AffineConstraintSet::constant(J), Vector::Zero(3)),
               RankDeficiencyError);
}

TEST(Projectors, SphereValues) {
  Vector dx = Vector::Zero(5);
  dx[0] = 1.0;
  const Vector q = Vector::Zero(5);
  Vector Qdx(5), Pdx(5);
  Qdx << 2.0 / 7, 0, 0, -2.0 / 7, 0;
  Pdx << 5.0 / 7, 0, 0, 2.0 / 7, 0;
  EXPECT_LT(max_abs(project_Q(sphere_system(), rolling(), q, dx) - Qdx), 1e-14);
  EXPECT_LT(max_abs(project_P(sphere_system(), rolling(), q, dx) - Pdx), 1e-14);
}

TEST(Projectors, TwoWheelMatrix) {
  const Scenario w = two_wheeled(1.0, 2.0);
  const Matrix P = projector_P_matrix(compatibility(
      w.system.plus->system, w.system.plus->constraints, Vector::Zero(4)));
  Matrix expected(4, 4);
  expected << 0.5, 0, 0.5, 0,
              0, 0.8, 0, 0.4,
              0.5, 0, 0.5, 0,
              0, 0.4, 0, 0.2;
  EXPECT_LT(max_abs(P - expected), 1e-14);
}

TEST(Projectors, KernelAndEmptyCases) {
  testing::Rng rng(1);
  const Vector q = Vector::Zero(5);
  // x in C0: velocity satisfies the rolling rows
  Vector v(5);
  v << 1.0, -2.0, 2.0, 1.0, 0.3;  // xdot = r wy, ydot = -r wx
  const Vector x = legendre(sphere_system(), q, v);
  EXPECT_LT(max_abs(project_Q(sphere_system(), rolling(), q, x)), 1e-14);
  EXPECT_LT(max_abs(project_P(sphere_system(), rolling(), q, x) - x), 1e-14);
  const Vector u = rng.vector(5);
  EXPECT_EQ(project_Q(sphere_system(), AffineConstraintSet::none(5), q, u),
            Vector::Zero(5));
}

TEST(Projectors, AlgebraicIdentities) {
  testing::Rng rng(2024);
  for (int k = 0; k < 1000; ++k) {
    const int n = rng.integer(2, 6);
    const int m = rng.integer(1, n - 1);
    const Matrix g = rng.spd(n);
    const auto sys = MechanicalSystem::with_constant_metric(ConfigChart::numbered(n), g);
    const auto set = AffineConstraintSet::constant(rng.full_rank_rows(m, n));
    const auto data = compatibility(sys, set, rng.vector(n));
    const Matrix P = projector_P_matrix(data);
    const Matrix Q = projector_Q_matrix(data);
    const Matrix I = Matrix::Identity(n, n);
    ASSERT_LT(max_abs(P * P - P), 1e-10);
    ASSERT_LT(max_abs(Q * Q - Q), 1e-10);
    ASSERT_LT(max_abs(P * Q), 1e-10);
    ASSERT_LT(max_abs(Q * P), 1e-10);
    ASSERT_LT(max_abs(P + Q - I), 1e-10);
    const Vector a = rng.vector(n), b = rng.vector(n);
    ASSERT_NEAR((P * a).dot(data.cometric * (Q * b)), 0.0, 1e-10);
  }
}

TEST(AffineOffset, LinearIsZero) {
  EXPECT_EQ(affine_offset(sphere_system(), rolling(), Vector::Zero(5)),
            Vector::Zero(5));
}

TEST(AffineOffset, RotatingTable) {
  const Scenario s = rotating_table(kR, kK2, 1.0, 2.0);
  Vector q = Vector::Zero(5);
  q[0] = 1.0;
  const Vector off =
      affine_offset(s.system.minus->system, s.system.minus->constraints, q);
  // Planar components as displayed; angular components follow from the
  // constraint rows (see the rotating-table notes in the README).
  EXPECT_NEAR(off[0], 0.0, 1e-15);
  EXPECT_NEAR(off[1], 2.0 / 7, 1e-15);
  EXPECT_NEAR(off[2], 2.0 / 7, 1e-15);
  EXPECT_NEAR(off[3], 0.0, 1e-15);
  EXPECT_NEAR(off[4], 0.0, 1e-15);

  testing::Rng rng(8);
  for (int k = 0; k < 100; ++k) {
    const double x = rng.uniform(-2, 2), y = rng.uniform(-2, 2);
    Vector qq = rng.vector(5);
    qq[0] = x;
    qq[1] = y;
    const double w = 1.0;
    Vector expected(5);
    expected << -y, x, x * kR, y * kR, 0.0;
    expected *= kK2 * w / (kR * kR + kK2);
    const Vector got =
        affine_offset(s.system.minus->system, s.system.minus->constraints, qq);
    ASSERT_LT(max_abs(got - expected), 1e-14);
    // Offset lies on the fiber: J G off + mu0 = 0.
    const PhasePoint on{qq, got};
    ASSERT_LT(max_abs(constraint_residual(s.system.minus->system,
                                          s.system.minus->constraints, on)),
              1e-14);
  }
}

TEST(AffineOffset, IndependentOfDisplacement) {
  testing::Rng rng(9);
  for (int k = 0; k < 200; ++k) {
    const int n = rng.integer(3, 6);
    const int m = rng.integer(1, n - 1);
    const Matrix g = rng.spd(n);
    const Matrix J = rng.full_rank_rows(m, n);
    const Vector mu = rng.vector(m);
    const auto sys = MechanicalSystem::with_constant_metric(ConfigChart::numbered(n), g);
    const auto set = AffineConstraintSet::constant(J, mu);
    const Matrix JG = J * g.inverse();
    // Two displacements: minimum-norm solution and one shifted along ker(JG).
    const Vector u1 = JG.completeOrthogonalDecomposition().solve(-mu);
    Eigen::FullPivLU<Matrix> lu(JG);
    const Matrix K = lu.kernel();
    const Vector u2 = u1 + K * rng.vector(static_cast<int>(K.cols()));
    const auto data = compatibility(sys, set, Vector::Zero(n));
    const Matrix Q = projector_Q_matrix(data);
    ASSERT_LT(max_abs(Q * u1 - affine_offset(data)), 1e-10);
    ASSERT_LT(max_abs(Q * u2 - affine_offset(data)), 1e-10);
  }
}

TEST(Focusing, OnFiberIsFixed) {
  Vector v(5);
  v << 0.5, 0.25, -0.25, 0.5, 1.0;
  const PhasePoint u{Vector::Zero(5), legendre(sphere_system(), Vector::Zero(5), v)};
  const PhasePoint f = focusing_point(sphere_system(), rolling(), u);
  EXPECT_LT(max_abs(f.p - u.p), 1e-15);
  EXPECT_LT(max_abs(constraint_residual(sphere_system(), rolling(), u)), 1e-15);
}

TEST(Focusing, SphereUpdate) {
  Vector p = Vector::Zero(5);
  p[0] = 1.0;
  const PhasePoint f = focusing_point(sphere_system(), rolling(), {Vector::Zero(5), p});
  Vector expected(5);
  expected << 5.0 / 7, 0, 0, 2.0 / 7, 0;
  EXPECT_LT(max_abs(f.p - expected), 1e-15);
}

TEST(Focusing, MatchesLeastSquaresOracle) {
  testing::Rng rng(77);
  for (int k = 0; k < 1000; ++k) {
    const int n = rng.integer(2, 6);
    const int m = rng.integer(1, n - 1);
    const Matrix g = rng.spd(n);
    const Matrix J = rng.full_rank_rows(m, n);
    const Vector mu = rng.vector(m);
    const auto sys = MechanicalSystem::with_constant_metric(ConfigChart::numbered(n), g);
    const auto set = AffineConstraintSet::constant(J, mu);
    const PhasePoint u{rng.vector(n), rng.vector(n)};
    const PhasePoint f = focusing_point(sys, set, u);
    const Vector oracle = testing::kkt_focusing(g.inverse(), J, mu, u.p);
    ASSERT_LT(max_abs(f.p - oracle), 1e-9);
    ASSERT_LT(max_abs(constraint_residual(sys, set, f)), 1e-10);
    ASSERT_LT(max_abs(focusing_point(sys, set, f).p - f.p), 1e-10);
  }
}

TEST(Focusing, CarnotInequality) {
  testing::Rng rng(4242);
  for (int k = 0; k < 1000; ++k) {
    const int n = rng.integer(2, 6);
    const int m = rng.integer(1, n - 1);
    const Matrix g = rng.spd(n);
    const auto sys = MechanicalSystem::with_constant_metric(ConfigChart::numbered(n), g);
    const auto set = AffineConstraintSet::constant(rng.full_rank_rows(m, n));
    const PhasePoint u{rng.vector(n), rng.vector(n)};
    const double before = kinetic_energy(sys, u);
    const double after = kinetic_energy(sys, focusing_point(sys, set, u));
    ASSERT_LE(after, before * (1 + 1e-14));
    if (constraint_residual(sys, set, u).cwiseAbs().maxCoeff() > 1e-6) {
      ASSERT_LT(after, before);
    }
  }
}

TEST(Residual, RollingVelocityIsOnFiber) {
  const Vector q = Vector::Zero(5);
  Vector v(5);
  // xdot = r wy, ydot = -r wx with wx = q1dot, wy = q2dot
  v << 0.8, -0.3, 0.3, 0.8, 2.0;
  const PhasePoint x{q, legendre(sphere_system(), q, v)};
  EXPECT_LT(max_abs(constraint_residual(sphere_system(), rolling(), x)), 1e-15);
  EXPECT_EQ(constraint_residual(sphere_system(), AffineConstraintSet::none(5), x).size(), 0);
}

TEST(Trace, AddsSurfaceRow) {
  const CriticalSurface fx{[](const Vector& q) { return q[0]; },
                           [](const Vector& q) {
                             Vector g = Vector::Zero(q.size());
                             g[0] = 1.0;
                             return g;
                           }};
  const auto flat = MechanicalSystem::with_constant_metric(
      ConfigChart::numbered(2), Matrix::Identity(2, 2));
  const auto tr = trace_constraints(AffineConstraintSet::none(2), fx);
  EXPECT_EQ(tr.count(), 1);
  const PhasePoint f = focusing_point(flat, tr, {Vector::Zero(2), Vector(Eigen::Vector2d(3, 4))});
  EXPECT_NEAR(f.p[0], 0.0, 1e-15);
  EXPECT_NEAR(f.p[1], 4.0, 1e-15);

  const auto sphere_tr = trace_constraints(rolling(), fx);
  EXPECT_EQ(numerical_rank(sphere_tr.rows_at(Vector::Zero(5))), 3);
}

TEST(Trace, TwoWheelFiberEqualizesMomenta) {
  const Scenario w = two_wheeled(1.0, 2.0, 1.5, 3.0);
  const auto& side = *w.system.plus;
  const auto tr = trace_constraints(side.constraints, w.system.surface);
  testing::Rng rng(12);
  for (int k = 0; k < 100; ++k) {
    Vector q = rng.vector(4);
    q[1] = q[0] + std::sqrt(9.0 - 1.0);  // l = b
    const PhasePoint f = focusing_point(side.system, tr, {q, rng.vector(4)});
    ASSERT_NEAR(f.p[0], f.p[1], 1e-12);
    ASSERT_NEAR(f.p[0], 1.0 * f.p[2], 1e-12);
    ASSERT_NEAR(f.p[1], 2.0 * f.p[3], 1e-12);
    const Vector v = anti_legendre(side.system, f);
    ASSERT_NEAR(w.system.surface.gradient_at(q).dot(v), 0.0, 1e-12);
  }
}

TEST(Trace, DegenerateRowRejected) {
  const CriticalSurface fx{[](const Vector& q) { return q[0]; }, std::nullopt};
  Matrix J(1, 2);
  J << 1, 0;
  const auto flat = MechanicalSystem::with_constant_metric(
      ConfigChart::numbered(2), Matrix::Identity(2, 2));
  const auto tr = trace_constraints(AffineConstraintSet::constant(J), fx);
  EXPECT_THROW(tr.rows_at(Vector::Zero(2)), TransversalityError);
}

TEST(Instantaneous, WallTable) {
  const Scenario s = sphere_wall(kR, kK2, 1.0);
  const auto& side = *s.system.plus;
  testing::Rng rng(31);
  const double s2 = kR * kR + kK2, s3 = kR * kR + 2 * kK2;
  for (int k = 0; k < 100; ++k) {
    Vector q = rng.vector(5);
    q[0] = 1.0;
    // lambda on the rolling fiber
    const PhasePoint lambda = focusing_point(side.system, side.constraints, {q, rng.vector(5)});
    const auto [P, Q] = instantaneous_projectors(side.system, *side.instantaneous, q, lambda.p);
    const Vector& l = lambda.p;
    const double py = (s2 * l[1] + kR * l[4]) / s3;
    Vector expected(5);
    expected << l[0], py, -kK2 * py / kR, kK2 * l[0] / kR, kK2 * py / kR;
    ASSERT_LT(max_abs(P - expected), 1e-10);
    ASSERT_LT(max_abs(P + Q - l), 1e-14);
    // Closed form of the instantaneous projector on arbitrary covectors.
    const Vector x = rng.vector(5);
    const auto [Px, Qx] = instantaneous_projectors(side.system, *side.instantaneous, q, x);
    Vector a(5), b(5);
    a << kR, 0, 0, kK2, 0;
    b << 0, -kR, kK2, 0, -kK2;
    const Vector closed = (kR * x[0] + x[3]) / s2 * a +
                          (-kR * x[1] + x[2] - x[4]) / s3 * b;
    ASSERT_LT(max_abs(Px - closed), 1e-10);
  }
}

}  // namespace
}  // namespace nhimpact
