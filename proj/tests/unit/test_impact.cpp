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

#include "nhimpact/impact.hpp"
#include "nhimpact/scenarios.hpp"
#include "test_support.hpp"

namespace nhimpact {
namespace {

using Kind = BoundaryClassification::Kind;

double max_abs(const Vector& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

Vector vec5(double a, double b, double c, double d, double e) {
  Vector v(5);
  v << a, b, c, d, e;
  return v;
}

// 1-D system split at x = 0 with co-metrics gm (x < 0) and gp (x > 0).
DiscontinuousSystem mass_jump(double gm, double gp, double vm = 0.0, double vp = 0.0) {
  auto side = [](double G, double V) {
    const double v0 = V;
    return SideData{MechanicalSystem::with_constant_metric(
                        ConfigChart::numbered(1), Matrix::Constant(1, 1, 1.0 / G),
                        [v0](const Vector&) { return v0; },
                        [](const Vector&) { return Vector(Vector::Zero(1)); }),
                    AffineConstraintSet::none(1), std::nullopt};
  };
  DiscontinuousSystem d;
  d.surface = CriticalSurface{[](const Vector& q) { return q[0]; },
                              [](const Vector&) { return Vector(Vector::Ones(1)); }};
  d.minus = side(gm, vm);
  d.plus = side(gp, vp);
  return d;
}

void expect_branch_invariants(const DiscontinuousSystem& dsys,
                              const TransitionResult& r,
                              const TransitionConfig& cfg = {}) {
  for (const auto& b : r.branches) {
    const auto set = constraints_for(dsys, b.dynamics);
    EXPECT_LT(max_abs(constraint_residual(dsys.side(b.side).system, set, b.point)), 1e-9);
    EXPECT_TRUE(b.classification.decisive());
    const auto again = classify_boundary(field_for(dsys, b.side, b.dynamics), b.point,
                                         dsys.surface, b.side, cfg.classification);
    EXPECT_EQ(again.kind, b.classification.kind);
  }
}

TEST(Characteristic, UnconstrainedIsGradient) {
  const auto d = mass_jump(1.0, 1.0);
  const Vector c = characteristic_direction(d, Side::Minus, {Vector::Zero(1), Vector::Ones(1)});
  EXPECT_EQ(c, Vector::Ones(1));
}

TEST(Characteristic, SphereDirection) {
  const Scenario s = rolling_sphere_rough(1.0, 0.4);
  const Vector c = characteristic_direction(s.system, Side::Plus,
                                            {Vector::Zero(5), Vector::Zero(5)});
  EXPECT_LT(max_abs(c - vec5(5.0 / 7, 0, 0, 2.0 / 7, 0)), 1e-15);
}

TEST(Characteristic, AnnihilatesTangentConstrainedVelocities) {
  testing::Rng rng(41);
  for (int k = 0; k < 200; ++k) {
    const int n = rng.integer(3, 6);
    const int m = rng.integer(1, n - 2);
    auto sys = testing::random_linear_system(rng, n, m, false);
    const Vector d = characteristic_direction(sys.dsys, Side::Plus,
                                              {Vector::Zero(n), Vector::Zero(n)});
    // Basis of D ∩ TN: kernel of [J; df].
    Matrix A(m + 1, n);
    A.topRows(m) = sys.J;
    A.row(m) = sys.normal.transpose();
    const Matrix K = Eigen::FullPivLU<Matrix>(A).kernel();
    ASSERT_LT((d.transpose() * K).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(Characteristic, TransversalityFailure) {
  auto d = mass_jump(1.0, 1.0);
  Matrix J(1, 2);
  J << 1, 0;
  const auto sys = MechanicalSystem::with_constant_metric(ConfigChart::numbered(2),
                                                          Matrix::Identity(2, 2));
  d.plus = SideData{sys, AffineConstraintSet::constant(J), std::nullopt};
  d.minus.reset();
  EXPECT_THROW(characteristic_direction(d, Side::Plus, {Vector::Zero(2), Vector::Zero(2)}),
               TransversalityError);
}

TEST(Reflective, WallCoefficient) {
  const Scenario s = sphere_wall(1.0, 0.4, 1.0);
  const auto& side = *s.system.plus;
  Vector q = Vector::Zero(5);
  q[0] = 1.0;
  const PhasePoint lambda = focusing_point(side.system, side.constraints,
                                           {q, vec5(1, 0.3, 0.1, 0.0, 0.2)});
  ASSERT_NEAR(lambda.p[0], 5.0 / 7 + 0.0, 1.0);  // sanity: on the fiber
  const double px = lambda.p[0];
  // Direction-level: direction P(dx).
  const Vector Pdx = characteristic_direction(
      rolling_sphere_rough(1.0, 0.4).system, Side::Plus, lambda);
  const Matrix G = cometric_at(side.system, q);
  EXPECT_NEAR(reflective_coefficient(G, lambda.p, Pdx), -14.0 / 5 * px, 1e-12);
  // System-level uses P(df) = -P(dx); the reflected point is the same.
  const double c = reflective_coefficient(s.system, Side::Plus, lambda);
  EXPECT_NEAR(c, 14.0 / 5 * px, 1e-12);
  const Vector d = characteristic_direction(s.system, Side::Plus, lambda);
  EXPECT_LT(max_abs(lambda.p + c * d - (lambda.p - 14.0 / 5 * px * Pdx)), 1e-12);
}

TEST(Reflective, GrazingGivesZero) {
  const auto d = mass_jump(1.0, 1.0);
  EXPECT_EQ(reflective_coefficient(d, Side::Minus, {Vector::Zero(1), Vector::Zero(1)}), 0.0);
}

TEST(Reflective, ConservesEnergy) {
  testing::Rng rng(8);
  for (int k = 0; k < 500; ++k) {
    const int n = rng.integer(2, 6);
    const int m = rng.integer(0, n - 2);
    auto sys = m > 0 ? testing::random_linear_system(rng, n, m, false)
                     : testing::random_linear_system(rng, n, 1, false);
    if (m == 0) sys.dsys.plus->constraints = AffineConstraintSet::none(n);
    const auto& side = *sys.dsys.plus;
    const PhasePoint y = focusing_point(side.system, side.constraints,
                                        {Vector::Zero(n), rng.vector(n)});
    const double c = reflective_coefficient(sys.dsys, Side::Plus, y);
    const Vector d = characteristic_direction(sys.dsys, Side::Plus, y);
    const double e0 = hamiltonian(side.system, y);
    ASSERT_NEAR(hamiltonian(side.system, {y.q, y.p + c * d}), e0, 1e-10 * std::max(1.0, e0));
  }
}

TEST(Refractive, ContinuityLimit) {
  const auto d = mass_jump(1.0, 1.0);
  const PhasePoint y{Vector::Zero(1), Vector::Constant(1, 2.0)};
  const auto roots = refractive_coefficients(d, Side::Minus, y);
  ASSERT_EQ(roots.size(), 2u);
  EXPECT_NEAR(roots[0], reflective_coefficient(d, Side::Minus, y), 1e-14);
  EXPECT_NEAR(roots[1], 0.0, 1e-14);
}

TEST(Refractive, MassJump) {
  const auto d = mass_jump(1.0, 0.25);
  const PhasePoint y{Vector::Zero(1), Vector::Constant(1, 2.0)};
  const auto roots = refractive_coefficients(d, Side::Minus, y);
  ASSERT_EQ(roots.size(), 2u);
  EXPECT_NEAR(roots[0], -6.0, 1e-14);
  EXPECT_NEAR(roots[1], 2.0, 1e-14);
}

TEST(Refractive, TotalReflection) {
  const auto d = mass_jump(1.0, 1.0, 0.0, 5.0);
  const PhasePoint y{Vector::Zero(1), Vector::Constant(1, 2.0)};
  EXPECT_TRUE(refractive_coefficients(d, Side::Minus, y).empty());
}

TEST(Refractive, MatchesBracketingOracle) {
  testing::Rng rng(1000);
  for (int k = 0; k < 1000; ++k) {
    const int n = rng.integer(1, 5);
    const Matrix gm = rng.spd(n), gp = rng.spd(n);
    const double vjump = rng.uniform(-1.0, 1.0);
    DiscontinuousSystem d;
    const Vector a = rng.vector(n);
    d.surface = CriticalSurface{[a](const Vector& q) { return a.dot(q); },
                                [a](const Vector&) { return a; }};
    d.minus = SideData{MechanicalSystem::with_constant_metric(ConfigChart::numbered(n), gm),
                       AffineConstraintSet::none(n), std::nullopt};
    d.plus = SideData{MechanicalSystem::with_constant_metric(
                          ConfigChart::numbered(n), gp,
                          [vjump](const Vector&) { return vjump; },
                          [n](const Vector&) { return Vector(Vector::Zero(n)); }),
                      AffineConstraintSet::none(n), std::nullopt};
    const PhasePoint y{Vector::Zero(n), rng.vector(n)};
    const auto roots = refractive_coefficients(d, Side::Minus, y);
    const Matrix Gp = gp.inverse();
    const double E = hamiltonian(d.minus->system, y);
    auto phi = [&](double c) {
      return testing::kinetic(Gp, y.p + c * a) + vjump - E;
    };
    // Bound on |c| from the quadratic's coefficients.
    const double A = 0.5 * a.dot(Gp * a);
    const double bound = 2.0 + 4.0 * (std::abs(y.p.dot(Gp * a)) / A +
                                      std::sqrt(std::abs(E - vjump) / A + y.p.dot(Gp * y.p) / A));
    const auto oracle = testing::bracketed_roots(phi, -bound, bound);
    // Tangent (double) roots are skipped by the scan; require a clear margin.
    const double disc_margin = std::abs(phi(-y.p.dot(Gp * a) / (2 * A)));
    if (disc_margin < 1e-6) continue;
    ASSERT_EQ(roots.size(), oracle.size());
    for (std::size_t i = 0; i < roots.size(); ++i) {
      ASSERT_NEAR(roots[i], oracle[i], 1e-9 * std::max(1.0, std::abs(oracle[i])));
      ASSERT_NEAR(hamiltonian(d.plus->system, {y.q, y.p + roots[i] * a}), E,
                  1e-10 * std::max(1.0, std::abs(E)));
    }
  }
}

TEST(EnergyRoots, StableForSmallRoot) {
  Matrix G = Matrix::Identity(1, 1);
  const Vector p = Vector::Constant(1, 1e8);
  const Vector d = Vector::Ones(1);
  const auto roots = energy_matching_roots(G, p, d, 0.5 * 1e16);
  ASSERT_EQ(roots.size(), 2u);
  EXPECT_EQ(roots[1], 0.0);
  EXPECT_NEAR(roots[0], -2e8, 1e-6);
}

TEST(ElasticChange, SphereRefracts) {
  const Scenario s = rolling_sphere_rough(1.0, 0.4);
  const auto impact = ImpactState::make(s.system, {Vector::Zero(5), vec5(1, 0, 0, 0, 0)},
                                        Side::Minus);
  const auto r = transition(s.system, impact);
  EXPECT_EQ(r.regime, TransitionRegime::ElasticConstraintChange);
  ASSERT_EQ(r.branches.size(), 1u);
  EXPECT_EQ(r.branches[0].side, Side::Plus);
  EXPECT_EQ(r.branches[0].dynamics.kind, DynamicsKind::Constrained);
  EXPECT_EQ(r.branches[0].dynamics.source, Side::Plus);
  EXPECT_LT(max_abs(r.branches[0].point.p - vec5(5.0 / 7, 0, 0, 2.0 / 7, 0)), 1e-15);
  expect_branch_invariants(s.system, r);
}

TEST(ElasticChange, SphereReflectedByRoughness) {
  const Scenario s = rolling_sphere_rough(1.0, 0.4);
  // p_x > 0 before; strong backspin makes the focused p_x negative.
  const PhasePoint lambda{Vector::Zero(5), vec5(0.5, 0.2, 0.1, -1.0, 0.3)};
  const PhasePoint x = focusing_point(s.system.plus->system, s.system.plus->constraints, lambda);
  ASSERT_LT(x.p[0], 0.0);
  const auto r = transition(s.system, ImpactState::make(s.system, lambda, Side::Minus));
  ASSERT_EQ(r.branches.size(), 1u);
  EXPECT_EQ(r.branches[0].side, Side::Minus);
  EXPECT_EQ(r.branches[0].sequence_length, 3);
  EXPECT_LT(max_abs(r.branches[0].point.p - x.p), 1e-15);
  EXPECT_EQ(r.branches[0].classification.kind, Kind::In);
  expect_branch_invariants(s.system, r);

  TransitionConfig tight;
  tight.max_iterations = 1;
  EXPECT_THROW(decisive_elastic_constraint_change(
                   s.system, ImpactState::make(s.system, lambda, Side::Minus), tight),
               UndecidedError);
}

TEST(ElasticChange, SphereTrappingWhenFocusedPxVanishes) {
  const Scenario s = rolling_sphere_rough(1.0, 0.4);
  // r^2 px + r p2 = 0 -> focused px = 0 and p2 = 0.
  const PhasePoint lambda{Vector::Zero(5), vec5(0.4, 0.1, 0.0, -0.4, 0.0)};
  const auto r = transition(s.system, ImpactState::make(s.system, lambda, Side::Minus));
  ASSERT_EQ(r.branches.size(), 1u);
  EXPECT_EQ(r.branches[0].side, Side::Plus);
  EXPECT_EQ(r.branches[0].classification.kind, Kind::Trapping);
}

TEST(ElasticChange, SameConstraintsIdentity) {
  testing::Rng rng(3);
  auto sys = testing::random_linear_system(rng, 4, 2, true);
  const auto& side = *sys.dsys.plus;
  PhasePoint y = focusing_point(side.system, side.constraints, {Vector::Zero(4), rng.vector(4)});
  if (characteristic_direction(sys.dsys, Side::Plus, y).dot(
          cometric_at(side.system, y.q) * y.p) < 0)
    y.p = -y.p;
  // y moves toward +: it hits from the minus side.
  const auto r = transition(sys.dsys, ImpactState::make(sys.dsys, y, Side::Minus));
  ASSERT_EQ(r.branches.size(), 1u);
  EXPECT_EQ(r.branches[0].side, Side::Plus);
  EXPECT_LT(max_abs(r.branches[0].point.p - y.p), 1e-14);
  EXPECT_NEAR(hamiltonian(side.system, r.branches[0].point), hamiltonian(side.system, y), 1e-14);
}

TEST(ElasticDiscontinuous, WallDecisivePoint) {
  const Scenario s = sphere_wall(1.0, 0.4, 1.0);
  const auto& side = *s.system.plus;
  testing::Rng rng(5);
  for (int k = 0; k < 50; ++k) {
    Vector q = rng.vector(5);
    q[0] = 1.0;
    PhasePoint lambda = focusing_point(side.system, side.constraints, {q, rng.vector(5)});
    if (lambda.p[0] < 0) lambda.p = -lambda.p;  // moving into the wall
    const auto r = transition(s.system, ImpactState::make(s.system, lambda, Side::Plus));
    EXPECT_EQ(r.regime, TransitionRegime::ElasticDiscontinuousHamiltonian);
    ASSERT_EQ(r.branches.size(), 1u);
    const auto [Pinst, Qinst] = instantaneous_projectors(side.system, *side.instantaneous, q, lambda.p);
    const Vector Pdx = vec5(5.0 / 7, 0, 0, 2.0 / 7, 0);
    const Vector expected = Pinst - 14.0 / 5 * lambda.p[0] * Pdx;
    ASSERT_LT(max_abs(r.branches[0].point.p - expected), 1e-12);
    EXPECT_EQ(r.branches[0].side, Side::Plus);
    EXPECT_EQ(r.branches[0].classification.kind, Kind::In);
    expect_branch_invariants(s.system, r);
  }
}

TEST(ElasticDiscontinuous, MassJumpSplits) {
  const auto d = mass_jump(1.0, 0.25);
  const auto r = transition(d, ImpactState::make(d, {Vector::Zero(1), Vector::Constant(1, 2.0)},
                                                  Side::Minus));
  EXPECT_EQ(r.regime, TransitionRegime::ElasticDiscontinuousHamiltonian);
  ASSERT_EQ(r.branches.size(), 2u);
  EXPECT_EQ(r.branches[0].side, Side::Minus);
  EXPECT_NEAR(r.branches[0].point.p[0], -2.0, 1e-14);
  EXPECT_EQ(r.branches[1].side, Side::Plus);
  EXPECT_NEAR(r.branches[1].point.p[0], 4.0, 1e-14);
  expect_branch_invariants(d, r);
}

TEST(ElasticDiscontinuous, DualityFlipsNormalVelocity) {
  testing::Rng rng(55);
  for (int k = 0; k < 300; ++k) {
    const int n = rng.integer(2, 6);
    const int m = rng.integer(1, n - 1);
    auto sys = testing::random_linear_system(rng, n, m, false);
    const auto& side = *sys.dsys.plus;
    const PhasePoint y = focusing_point(side.system, side.constraints,
                                        {Vector::Zero(n), rng.vector(n)});
    const Matrix G = cometric_at(side.system, y.q);
    const double before = sys.normal.dot(G * y.p);
    const double c = reflective_coefficient(sys.dsys, Side::Plus, y);
    const Vector d = characteristic_direction(sys.dsys, Side::Plus, y);
    const double after = sys.normal.dot(G * (y.p + c * d));
    ASSERT_NEAR(after, -before, 1e-10 * std::max(1.0, std::abs(before)));
  }
}

TEST(ElasticDiscontinuous, GeneralSearchMatchesShortcut) {
  // Proportional metrics keep one momentum fiber on both sides, so the
  // shortcut applies. Rows scaled by a q-dependent factor force the general
  // search; the fiber is unchanged, so both must agree.
  testing::Rng rng(66);
  for (int k = 0; k < 50; ++k) {
    const int n = 4, m = 2;
    const Matrix gm = rng.spd(n);
    const Matrix gp = rng.uniform(0.3, 3.0) * gm;
    const Matrix J = rng.full_rank_rows(m, n);
    const Vector a = rng.vector(n);
    auto build = [&](bool q_dependent) {
      DiscontinuousSystem d;
      d.surface = CriticalSurface{[a](const Vector& q) { return a.dot(q); },
                                  [a](const Vector&) { return a; }};
      AffineConstraintSet set =
          q_dependent
              ? AffineConstraintSet(
                    n, m, [J](const Vector& q) { return Matrix(J * (1.0 + q.squaredNorm())); },
                    [m](const Vector&) { return Vector(Vector::Zero(m)); })
              : AffineConstraintSet::constant(J);
      d.minus = SideData{MechanicalSystem::with_constant_metric(ConfigChart::numbered(n), gm),
                         set, std::nullopt};
      d.plus = SideData{MechanicalSystem::with_constant_metric(ConfigChart::numbered(n), gp),
                        set, std::nullopt};
      return d;
    };
    const auto shortcut = build(false);
    const auto general = build(true);
    PhasePoint y = focusing_point(shortcut.minus->system, shortcut.minus->constraints,
                                  {Vector::Zero(n), rng.vector(n)});
    if (a.dot(gm.inverse() * y.p) < 0) y.p = -y.p;
    const auto r1 = transition(shortcut, ImpactState::make(shortcut, y, Side::Minus));
    const auto r2 = transition(general, ImpactState::make(general, y, Side::Minus));
    ASSERT_EQ(r1.branches.size(), r2.branches.size());
    for (std::size_t i = 0; i < r1.branches.size(); ++i) {
      bool found = false;
      for (const auto& b : r2.branches)
        found = found || (b.side == r1.branches[i].side &&
                          max_abs(b.point.p - r1.branches[i].point.p) < 1e-9);
      ASSERT_TRUE(found);
    }
    expect_branch_invariants(shortcut, r1);
  }
}

TEST(InelasticChange, TraceFocusing) {
  Scenario s = rolling_sphere_rough(1.0, 0.4);
  s.system.mode = ImpactMode::Inelastic;
  testing::Rng rng(6);
  const auto tr = trace_constraints(s.system.plus->constraints, s.system.surface);
  for (int k = 0; k < 100; ++k) {
    Vector q = rng.vector(5);
    q[0] = 0.0;
    PhasePoint y{q, rng.vector(5)};
    if (y.p[0] < 0) y.p[0] = -y.p[0];
    const auto r = transition(s.system, ImpactState::make(s.system, y, Side::Minus));
    ASSERT_EQ(r.regime, TransitionRegime::InelasticConstraintChange);
    ASSERT_EQ(r.branches.size(), 1u);
    const auto& b = r.branches[0];
    EXPECT_EQ(b.dynamics.kind, DynamicsKind::Trace);
    EXPECT_EQ(b.side, Side::Plus);
    const auto& sys = s.system.plus->system;
    const Vector v = anti_legendre(sys, b.point);
    ASSERT_LT(std::abs(s.system.surface.gradient_at(q).dot(v)), 1e-10);
    ASSERT_LT(max_abs(constraint_residual(sys, s.system.plus->constraints, b.point)), 1e-10);
    const Vector oracle = testing::kkt_focusing(cometric_at(sys, q), tr.rows_at(q),
                                                Vector::Zero(3), y.p);
    ASSERT_LT(max_abs(b.point.p - oracle), 1e-9);
    ASSERT_LE(kinetic_energy(sys, b.point), kinetic_energy(sys, y) + 1e-14);
  }
}

TEST(InelasticDiscontinuous, WallAndWheels) {
  Scenario wall = sphere_wall(1.0, 0.4, 1.0);
  wall.system.mode = ImpactMode::Inelastic;
  const auto& side = *wall.system.plus;
  testing::Rng rng(7);
  const auto inst_tr = trace_constraints(*side.instantaneous, wall.system.surface);
  for (int k = 0; k < 50; ++k) {
    Vector q = rng.vector(5);
    q[0] = 1.0;
    PhasePoint lambda = focusing_point(side.system, side.constraints, {q, rng.vector(5)});
    if (lambda.p[0] < 0) lambda.p = -lambda.p;
    const auto r = transition(wall.system, ImpactState::make(wall.system, lambda, Side::Plus));
    ASSERT_EQ(r.regime, TransitionRegime::InelasticDiscontinuousHamiltonian);
    ASSERT_EQ(r.branches.size(), 1u);
    EXPECT_EQ(r.branches[0].dynamics.kind, DynamicsKind::InstantaneousTrace);
    const PhasePoint expected = focusing_point(side.system, inst_tr, lambda);
    ASSERT_LT(max_abs(r.branches[0].point.p - expected.p), 1e-12);
    ASSERT_NEAR(r.branches[0].point.p[0], 0.0, 1e-12);
    ASSERT_LE(kinetic_energy(side.system, r.branches[0].point),
              kinetic_energy(side.system, lambda) + 1e-14);
    expect_branch_invariants(wall.system, r);
  }

  Scenario wheels = two_wheeled(1.0, 2.0, 1.5, 3.0);
  wheels.system.mode = ImpactMode::Inelastic;
  const auto& ws = *wheels.system.plus;
  for (int k = 0; k < 50; ++k) {
    Vector q = rng.vector(4);
    q[1] = q[0] + std::sqrt(8.0);  // l = b
    PhasePoint lambda = focusing_point(ws.system, ws.constraints, {q, rng.vector(4)});
    if (lambda.p[1] - lambda.p[0] < 0) lambda.p = -lambda.p;  // lengthening
    const auto r = transition(wheels.system, ImpactState::make(wheels.system, lambda, Side::Plus));
    ASSERT_EQ(r.branches.size(), 1u);
    EXPECT_EQ(r.branches[0].dynamics.kind, DynamicsKind::Trace);
    ASSERT_NEAR(r.branches[0].point.p[0], r.branches[0].point.p[1], 1e-12);
    const auto tr = trace_constraints(ws.constraints, wheels.system.surface);
    ASSERT_LT(max_abs(r.branches[0].point.p - focusing_point(ws.system, tr, lambda).p), 1e-12);
  }
}

TEST(Transition, RotatingTableCharacter) {
  const Scenario s = rotating_table(1.0, 0.4, 1.0, 2.0);
  const auto& minus = *s.system.minus;
  const auto& plus = *s.system.plus;
  auto impact_at = [&](double x0) {
    Vector q = vec5(x0, x0, 0, 0, 0);
    // p_x = 1, p_y = 0 on C_-: q-momenta from the rolling rows.
    PhasePoint lambda{q, vec5(1.0, 0.0, 0.0, 0.0, 0.0)};
    lambda.p[2] = 0.4 * (1.0 * x0 - 0.0) / 1.0;
    lambda.p[3] = 0.4 * (1.0 + 1.0 * x0) / 1.0;
    return lambda;
  };
  const PhasePoint lambda = impact_at(1.0);
  ASSERT_LT(max_abs(constraint_residual(minus.system, minus.constraints, lambda)), 1e-14);
  const PhasePoint x = focusing_point(plus.system, plus.constraints, lambda);
  const Vector df = s.system.surface.gradient_at(x.q);
  EXPECT_NEAR(df.dot(cometric_at(plus.system, x.q) * x.p), 3.0 / 7, 1e-12);

  for (int i = 0; i < 20; ++i) {
    const double x0 = -2.0 + 4.0 * i / 19.0;
    const PhasePoint l = impact_at(x0);
    const double character = 1.0 - 4.0 * x0 / 7.0;
    const auto r = transition(s.system, ImpactState::make(s.system, l, Side::Minus));
    ASSERT_EQ(r.branches.size(), 1u);
    EXPECT_EQ(r.branches[0].dynamics.source, Side::Plus);
    EXPECT_EQ(r.branches[0].side, character > 0 ? Side::Plus : Side::Minus);

    DiscontinuousSystem literal = s.system;
    literal.constraints_follow_transition = false;
    const auto r2 = transition(literal, ImpactState::make(literal, l, Side::Minus));
    if (character > 0) {
      ASSERT_EQ(r2.branches.size(), 1u);
      EXPECT_EQ(r2.branches[0].side, Side::Plus);
    } else {
      EXPECT_TRUE(r2.trapped());
    }
  }
}

TEST(Transition, CarnotOnSmoothLinearChange) {
  testing::Rng rng(77);
  for (int k = 0; k < 300; ++k) {
    const int n = rng.integer(3, 6);
    const Matrix g = rng.spd(n);
    const auto sys = MechanicalSystem::with_constant_metric(ConfigChart::numbered(n), g);
    const Vector a = rng.vector(n);
    DiscontinuousSystem d;
    d.surface = CriticalSurface{[a](const Vector& q) { return a.dot(q); },
                                [a](const Vector&) { return a; }};
    d.minus = SideData{sys, AffineConstraintSet::constant(rng.full_rank_rows(rng.integer(1, n - 2), n)),
                       std::nullopt};
    d.plus = SideData{sys, AffineConstraintSet::constant(rng.full_rank_rows(rng.integer(1, n - 2), n)),
                      std::nullopt};
    d.mode = rng.integer(0, 1) ? ImpactMode::Elastic : ImpactMode::Inelastic;
    PhasePoint y = focusing_point(sys, d.minus->constraints, {Vector::Zero(n), rng.vector(n)});
    if (a.dot(g.inverse() * y.p) < 0) y.p = -y.p;
    TransitionResult r;
    try {
      r = transition(d, ImpactState::make(d, y, Side::Minus));
    } catch (const TransversalityError&) {
      continue;
    }
    for (const auto& b : r.branches)
      ASSERT_LE(kinetic_energy(sys, b.point), kinetic_energy(sys, y) * (1 + 1e-12));
    expect_branch_invariants(d, r);
  }
}

TEST(Transition, RequiresPresentSide) {
  const Scenario s = sphere_wall();
  EXPECT_THROW(s.system.side(Side::Minus), ConfigError);
  EXPECT_FALSE(hamiltonian_smooth_at(s.system, Vector::Zero(5)));
}

}  // namespace
}  // namespace nhimpact
