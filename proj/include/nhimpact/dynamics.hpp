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
#include <vector>

#include "nhimpact/constraints.hpp"
#include "nhimpact/geometry.hpp"

namespace nhimpact {

struct PhaseVelocity {
  Vector dq;
  Vector dp;
};

using VectorField = std::function<PhaseVelocity(const PhasePoint&)>;

struct IntegrationConfig {
  double dt = 1e-3;
  double event_tolerance = 1e-12;
  long max_steps = 100'000'000;
  // Threshold on |X^j(f)| below which a derivative counts as zero.
  double boundary_order_tolerance = 1e-8;
  int max_tangency_order = 3;
  // Flow step for the derivative stencils used in classification.
  double classification_step = 1e-3;
  int bisection_iterations = 200;
  // Re-focus onto the constraint fiber after each step. Off by default so
  // constraint drift is measured rather than hidden.
  bool reproject = false;

  void validate() const;
};

PhaseVelocity free_field(const MechanicalSystem& system, const PhasePoint& x);

// Free field plus reaction J^t lambda, with lambda chosen so the constraint
// residual has zero time derivative.
PhaseVelocity constrained_field(const MechanicalSystem& system,
                                const AffineConstraintSet& constraints,
                                const PhasePoint& x);

// The reaction multipliers alone (empty when m = 0).
Vector constraint_multipliers(const MechanicalSystem& system,
                              const AffineConstraintSet& constraints,
                              const PhasePoint& x);

VectorField make_free_field(MechanicalSystem system);
VectorField make_constrained_field(MechanicalSystem system,
                                   AffineConstraintSet constraints);

PhasePoint rk4_step(const VectorField& field, const PhasePoint& x, double h);

struct TrajectorySample {
  double t;
  PhasePoint x;
};

enum class TerminalEvent { None, BoundaryHit, StepLimit };

struct TrajectorySegment {
  std::vector<TrajectorySample> samples;  // accepted steps, start excluded
  TerminalEvent terminal = TerminalEvent::None;
  // Set when terminal == BoundaryHit.
  std::optional<TrajectorySample> hit;
  Side side = Side::Plus;
};

struct IntegrationOptions {
  bool detect_events = true;
  std::function<PhasePoint(const PhasePoint&)> reproject;
};

// Fixed-step RK4 on [t_start, t_end]. A sign change of side*f between two
// steps is refined by bisection on the sub-step length until
// |f| < event_tolerance, and the segment ends there.
TrajectorySegment integrate(const VectorField& field, const PhasePoint& start,
                            const CriticalSurface& surface, Side side,
                            const IntegrationConfig& config, double t_start,
                            double t_end, const IntegrationOptions& options = {});

struct BoundaryClassification {
  enum class Kind { In, Out, Trapping };
  Kind kind = Kind::Trapping;
  // j such that X^{j+1}(f) is the first non-vanishing derivative.
  int order = 0;

  bool decisive() const { return kind != Kind::Out; }
};

const char* to_string(BoundaryClassification::Kind kind);

// In/out/trapping test of y on N for the side where side*f >= 0.
BoundaryClassification classify_boundary(const VectorField& field,
                                         const PhasePoint& y,
                                         const CriticalSurface& surface,
                                         Side inside,
                                         const IntegrationConfig& config);

// Derivatives X^1(f) .. X^{orders}(f) of side*f along the field at y.
std::vector<double> boundary_derivatives(const VectorField& field,
                                         const PhasePoint& y,
                                         const CriticalSurface& surface,
                                         Side inside, int orders,
                                         double flow_step);

// Finite-difference weights (Fornberg) for the given derivative order at 0.
std::vector<double> finite_difference_weights(int derivative,
                                              const std::vector<double>& nodes);

}  // namespace nhimpact
