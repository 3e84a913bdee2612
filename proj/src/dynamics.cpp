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

#include "nhimpact/dynamics.hpp"

#include <algorithm>
#include <cmath>

namespace nhimpact {

void IntegrationConfig::validate() const {
  if (!(dt > 0.0)) throw ConfigError("dt must be positive");
  if (!(event_tolerance > 0.0))
    throw ConfigError("event_tolerance must be positive");
  if (!(boundary_order_tolerance > 0.0))
    throw ConfigError("boundary_order_tolerance must be positive");
  if (!(classification_step > 0.0))
    throw ConfigError("classification_step must be positive");
  if (max_tangency_order < 1 || max_tangency_order > 8)
    throw ConfigError("max_tangency_order must lie in [1, 8]");
  if (max_steps < 1) throw ConfigError("max_steps must be positive");
}

PhaseVelocity free_field(const MechanicalSystem& system, const PhasePoint& x) {
  const Vector v = anti_legendre(system, x);
  const std::vector<Matrix> dg = metric_derivative_at(system, x.q);
  Vector dp = -potential_gradient_at(system, x.q);
  for (int a = 0; a < system.dimension(); ++a)
    dp[a] += 0.5 * v.dot(dg[a] * v);
  return {v, dp};
}

namespace {

// Time derivative of J(q) G(q) p + mu0(q) along (dq, dp).
Vector residual_rate(const MechanicalSystem& system,
                     const AffineConstraintSet& constraints,
                     const CompatibilityData& data, const PhasePoint& x,
                     const Vector& dq, const Vector& dp) {
  Vector rate = data.rows * (data.cometric * dp);
  const double speed = dq.cwiseAbs().maxCoeff();
  if (speed == 0.0) return rate;
  const double e = 1e-3 * std::max(1.0, x.q.cwiseAbs().maxCoeff()) / speed;
  auto residual_at = [&](double s) -> Vector {
    const PhasePoint shifted{x.q + s * dq, x.p};
    return constraint_residual(system, constraints, shifted);
  };
  rate += (-residual_at(2 * e) + 8.0 * residual_at(e) - 8.0 * residual_at(-e) +
           residual_at(-2 * e)) /
          (12.0 * e);
  return rate;
}

}  // namespace

Vector constraint_multipliers(const MechanicalSystem& system,
                              const AffineConstraintSet& constraints,
                              const PhasePoint& x) {
  if (constraints.count() == 0) return Vector(0);
  const PhaseVelocity free = free_field(system, x);
  const CompatibilityData data = compatibility(system, constraints, x.q);
  return -data.B_inverse *
         residual_rate(system, constraints, data, x, free.dq, free.dp);
}

PhaseVelocity constrained_field(const MechanicalSystem& system,
                                const AffineConstraintSet& constraints,
                                const PhasePoint& x) {
  PhaseVelocity field = free_field(system, x);
  if (constraints.count() == 0) return field;
  const CompatibilityData data = compatibility(system, constraints, x.q);
  const Vector lambda =
      -data.B_inverse *
      residual_rate(system, constraints, data, x, field.dq, field.dp);
  field.dp += data.rows.transpose() * lambda;
  return field;
}

VectorField make_free_field(MechanicalSystem system) {
  return [system = std::move(system)](const PhasePoint& x) {
    return free_field(system, x);
  };
}

VectorField make_constrained_field(MechanicalSystem system,
                                   AffineConstraintSet constraints) {
  return [system = std::move(system),
          constraints = std::move(constraints)](const PhasePoint& x) {
    return constrained_field(system, constraints, x);
  };
}

PhasePoint rk4_step(const VectorField& field, const PhasePoint& x, double h) {
  const PhaseVelocity k1 = field(x);
  const PhaseVelocity k2 =
      field({x.q + 0.5 * h * k1.dq, x.p + 0.5 * h * k1.dp});
  const PhaseVelocity k3 =
      field({x.q + 0.5 * h * k2.dq, x.p + 0.5 * h * k2.dp});
  const PhaseVelocity k4 = field({x.q + h * k3.dq, x.p + h * k3.dp});
  return {x.q + (h / 6.0) * (k1.dq + 2.0 * k2.dq + 2.0 * k3.dq + k4.dq),
          x.p + (h / 6.0) * (k1.dp + 2.0 * k2.dp + 2.0 * k3.dp + k4.dp)};
}

TrajectorySegment integrate(const VectorField& field, const PhasePoint& start,
                            const CriticalSurface& surface, Side side,
                            const IntegrationConfig& config, double t_start,
                            double t_end, const IntegrationOptions& options) {
  config.validate();
  TrajectorySegment segment;
  segment.side = side;
  const double s = sign_of(side);
  auto oriented = [&](const PhasePoint& x) { return s * surface.value(x.q); };

  double prev = oriented(start);
  if (options.detect_events) {
    if (prev < -config.event_tolerance)
      throw NumericalError("integrate", "start point lies on the wrong side");
    prev = std::max(prev, 0.0);
  }

  PhasePoint x = start;
  double t = t_start;
  long steps = 0;
  while (t_end - t > 1e-12 * std::max(1.0, std::abs(t_end))) {
    if (steps >= config.max_steps) {
      segment.terminal = TerminalEvent::StepLimit;
      return segment;
    }
    const double h = std::min(config.dt, t_end - t);
    PhasePoint next = rk4_step(field, x, h);
    if (options.reproject) next = options.reproject(next);
    ++steps;
    const double value = oriented(next);
    if (options.detect_events && value < 0.0 && prev >= 0.0) {
      double lo = 0.0, hi = h;
      PhasePoint best = next;
      double best_h = h;
      double best_value = value;
      for (int it = 0; it < config.bisection_iterations; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        PhasePoint trial = rk4_step(field, x, mid);
        if (options.reproject) trial = options.reproject(trial);
        const double g = oriented(trial);
        if (std::abs(g) < std::abs(best_value)) {
          best = trial;
          best_h = mid;
          best_value = g;
        }
        if (std::abs(g) < config.event_tolerance) break;
        (g >= 0.0 ? lo : hi) = mid;
      }
      segment.terminal = TerminalEvent::BoundaryHit;
      segment.hit = TrajectorySample{t + best_h, best};
      segment.samples.push_back(*segment.hit);
      return segment;
    }
    t = (h < config.dt) ? t_end : t_start + static_cast<double>(steps) * config.dt;
    x = std::move(next);
    prev = value;
    segment.samples.push_back({t, x});
  }
  return segment;
}

const char* to_string(BoundaryClassification::Kind kind) {
  switch (kind) {
    case BoundaryClassification::Kind::In:
      return "in";
    case BoundaryClassification::Kind::Out:
      return "out";
    case BoundaryClassification::Kind::Trapping:
      return "trapping";
  }
  return "?";
}

std::vector<double> finite_difference_weights(int derivative,
                                              const std::vector<double>& nodes) {
  const int n = static_cast<int>(nodes.size());
  const int m = derivative;
  std::vector<std::vector<double>> c(n, std::vector<double>(m + 1, 0.0));
  double c1 = 1.0;
  double c4 = nodes[0];
  c[0][0] = 1.0;
  for (int i = 1; i < n; ++i) {
    const int mn = std::min(i, m);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = nodes[i];
    for (int j = 0; j < i; ++j) {
      const double c3 = nodes[i] - nodes[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k)
          c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
        c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
      }
      for (int k = mn; k >= 1; --k)
        c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
      c[j][0] = c4 * c[j][0] / c3;
    }
    c1 = c2;
  }
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) w[i] = c[i][m];
  return w;
}

namespace {

double surface_rate(const VectorField& field, const PhasePoint& x,
                    const CriticalSurface& surface, double s) {
  return s * surface.gradient_at(x.q).dot(field(x).dq);
}

}  // namespace

std::vector<double> boundary_derivatives(const VectorField& field,
                                         const PhasePoint& y,
                                         const CriticalSurface& surface,
                                         Side inside, int orders,
                                         double flow_step) {
  const double s = sign_of(inside);
  std::vector<double> out;
  out.push_back(surface_rate(field, y, surface, s));
  if (orders <= 1) return out;

  const int half = std::max(4, orders);
  std::vector<double> nodes;
  std::vector<double> rates;
  std::vector<PhasePoint> backward{y}, forward{y};
  for (int k = 1; k <= half; ++k) {
    backward.push_back(rk4_step(field, backward.back(), -flow_step));
    forward.push_back(rk4_step(field, forward.back(), flow_step));
  }
  for (int k = -half; k <= half; ++k) {
    nodes.push_back(static_cast<double>(k));
    const PhasePoint& x = k < 0 ? backward[-k] : forward[k];
    rates.push_back(k == 0 ? out[0] : surface_rate(field, x, surface, s));
  }
  for (int d = 1; d < orders; ++d) {
    const std::vector<double> w = finite_difference_weights(d, nodes);
    double acc = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) acc += w[i] * rates[i];
    out.push_back(acc / std::pow(flow_step, d));
  }
  return out;
}

BoundaryClassification classify_boundary(const VectorField& field,
                                         const PhasePoint& y,
                                         const CriticalSurface& surface,
                                         Side inside,
                                         const IntegrationConfig& config) {
  using Kind = BoundaryClassification::Kind;
  const double tol = config.boundary_order_tolerance;
  const double first = surface_rate(field, y, surface, sign_of(inside));
  if (std::abs(first) > tol) return {first > 0.0 ? Kind::In : Kind::Out, 0};

  const std::vector<double> derivs =
      boundary_derivatives(field, y, surface, inside,
                           config.max_tangency_order + 1,
                           config.classification_step);
  for (int j = 1; j < static_cast<int>(derivs.size()); ++j) {
    if (std::abs(derivs[j]) > tol)
      return {derivs[j] > 0.0 ? Kind::In : Kind::Out, j};
  }
  return {Kind::Trapping, config.max_tangency_order};
}

}  // namespace nhimpact
