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

#include <optional>
#include <vector>

#include "nhimpact/constraints.hpp"
#include "nhimpact/dynamics.hpp"
#include "nhimpact/geometry.hpp"

namespace nhimpact {

enum class ImpactMode { Elastic, Inelastic };

const char* to_string(ImpactMode mode);

// Data of one side of the critical surface. The instantaneous set, when
// present, is the complete set acting at the instant of crossing: it already
// contains the side's regular rows.
struct SideData {
  MechanicalSystem system;
  AffineConstraintSet constraints;
  std::optional<AffineConstraintSet> instantaneous;
};

// Two-sided system cut along N = f^-1(0). An absent side is a wall (H = inf).
struct DiscontinuousSystem {
  CriticalSurface surface;
  std::optional<SideData> minus;
  std::optional<SideData> plus;
  ImpactMode mode = ImpactMode::Elastic;
  // After a transition the newly focused constraint set governs both sides
  // (a table whose spin changes no matter which way the ball goes).
  bool constraints_follow_transition = false;

  bool has_side(Side s) const { return s == Side::Plus ? plus.has_value() : minus.has_value(); }
  const SideData& side(Side s) const;
  int dimension() const;
  void validate() const;
};

struct ImpactState {
  PhasePoint y;
  Side side = Side::Minus;
  // Side whose regular constraints governed the motion before the hit.
  // Differs from side only under constraints_follow_transition.
  Side active_constraints = Side::Minus;
  double energy = 0.0;

  static ImpactState make(const DiscontinuousSystem& dsys, PhasePoint y,
                          Side side);
  static ImpactState make(const DiscontinuousSystem& dsys, PhasePoint y,
                          Side side, Side active_constraints);
};

enum class DynamicsKind { Constrained, Trace, InstantaneousTrace };

const char* to_string(DynamicsKind kind);

// Which vector field continues the motion: the constraint set of 'source'
// (or its trace / instantaneous trace on N).
struct DynamicsTag {
  DynamicsKind kind = DynamicsKind::Constrained;
  Side source = Side::Plus;
};

struct DecisiveBranch {
  PhasePoint point;
  Side side = Side::Plus;
  DynamicsTag dynamics;
  BoundaryClassification classification;
  int sequence_length = 1;  // admissible sequence length, impact included
};

enum class TransitionRegime {
  ElasticConstraintChange,
  ElasticDiscontinuousHamiltonian,
  InelasticConstraintChange,
  InelasticDiscontinuousHamiltonian,
};

const char* to_string(TransitionRegime regime);

struct TransitionResult {
  TransitionRegime regime = TransitionRegime::ElasticConstraintChange;
  std::vector<DecisiveBranch> branches;  // empty: trapped

  bool trapped() const { return branches.empty(); }
};

struct TransitionConfig {
  IntegrationConfig classification;
  int max_iterations = 64;
  double cycle_tolerance = 1e-9;
  double energy_floor = 1e-14;
  // |P(df)|_G below this fraction of |df|_G is a transversality failure.
  double transversality_tolerance = 1e-10;
  // Relative tolerance deciding that both side Hamiltonians agree at q.
  double hamiltonian_match_tolerance = 1e-12;
};

// P_side(d_qf) at the configuration of y.
Vector characteristic_direction(const DiscontinuousSystem& dsys, Side side,
                                const PhasePoint& y,
                                const TransitionConfig& config = {});

// Nonzero c with |p + c d|_G = |p|_G, i.e. -2 G(p,d) / G(d,d).
double reflective_coefficient(const Matrix& cometric, const Vector& p,
                              const Vector& direction);
double reflective_coefficient(const DiscontinuousSystem& dsys, Side side,
                              const PhasePoint& y,
                              const TransitionConfig& config = {});

// Real roots c (ascending, duplicates merged) of
// 1/2 G(p + c d, p + c d) = kinetic_target.
std::vector<double> energy_matching_roots(const Matrix& cometric,
                                          const Vector& p,
                                          const Vector& direction,
                                          double kinetic_target);

// Roots c with H_other(y + c P_from(df)) = H_from(y). Empty means total
// reflection.
std::vector<double> refractive_coefficients(const DiscontinuousSystem& dsys,
                                            Side from_side,
                                            const PhasePoint& y,
                                            const TransitionConfig& config = {});

TransitionResult decisive_elastic_constraint_change(
    const DiscontinuousSystem& dsys, const ImpactState& impact,
    const TransitionConfig& config = {});
TransitionResult decisive_elastic_discontinuous_H(
    const DiscontinuousSystem& dsys, const ImpactState& impact,
    const TransitionConfig& config = {});
TransitionResult decisive_inelastic_constraint_change(
    const DiscontinuousSystem& dsys, const ImpactState& impact,
    const TransitionConfig& config = {});
TransitionResult decisive_inelastic_discontinuous_H(
    const DiscontinuousSystem& dsys, const ImpactState& impact,
    const TransitionConfig& config = {});

// Picks the regime from the mode and whether the side Hamiltonians agree at
// the impact configuration.
TransitionResult transition(const DiscontinuousSystem& dsys,
                            const ImpactState& impact,
                            const TransitionConfig& config = {});

bool hamiltonian_smooth_at(const DiscontinuousSystem& dsys, const Vector& q,
                           double rel_tol = 1e-12);

// Constraint set and vector field selected by a dynamics tag.
AffineConstraintSet constraints_for(const DiscontinuousSystem& dsys,
                                    const DynamicsTag& tag);
VectorField field_for(const DiscontinuousSystem& dsys, Side side,
                      const DynamicsTag& tag);

}  // namespace nhimpact
