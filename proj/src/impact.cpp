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

#include "nhimpact/impact.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

namespace nhimpact {

const char* to_string(ImpactMode mode) {
  return mode == ImpactMode::Elastic ? "elastic" : "inelastic";
}

const char* to_string(DynamicsKind kind) {
  switch (kind) {
    case DynamicsKind::Constrained:
      return "constrained";
    case DynamicsKind::Trace:
      return "trace";
    case DynamicsKind::InstantaneousTrace:
      return "inst_trace";
  }
  return "?";
}

const char* to_string(TransitionRegime regime) {
  switch (regime) {
    case TransitionRegime::ElasticConstraintChange:
      return "elastic_constraint_change";
    case TransitionRegime::ElasticDiscontinuousHamiltonian:
      return "elastic_discontinuous_hamiltonian";
    case TransitionRegime::InelasticConstraintChange:
      return "inelastic_constraint_change";
    case TransitionRegime::InelasticDiscontinuousHamiltonian:
      return "inelastic_discontinuous_hamiltonian";
  }
  return "?";
}

const SideData& DiscontinuousSystem::side(Side s) const {
  const auto& data = s == Side::Plus ? plus : minus;
  if (!data)
    throw ConfigError(std::string("side ") + to_string(s) +
                      " is a wall and carries no dynamics");
  return *data;
}

int DiscontinuousSystem::dimension() const {
  return plus ? plus->system.dimension() : side(Side::Minus).system.dimension();
}

void DiscontinuousSystem::validate() const {
  if (!plus && !minus)
    throw ConfigError("a discontinuous system needs at least one side");
  if (!surface.f) throw ConfigError("critical surface has no function");
  const int n = dimension();
  for (Side s : {Side::Minus, Side::Plus}) {
    if (!has_side(s)) continue;
    const SideData& d = side(s);
    if (d.system.dimension() != n || d.constraints.dimension() != n ||
        (d.instantaneous && d.instantaneous->dimension() != n))
      throw ConfigError("side data dimensions disagree");
  }
}

ImpactState ImpactState::make(const DiscontinuousSystem& dsys, PhasePoint y,
                               Side side) {
  return make(dsys, std::move(y), side, side);
}

ImpactState ImpactState::make(const DiscontinuousSystem& dsys, PhasePoint y,
                              Side side, Side active_constraints) {
  ImpactState state;
  state.energy = hamiltonian(dsys.side(side).system, y);
  state.y = std::move(y);
  state.side = side;
  state.active_constraints = active_constraints;
  return state;
}

bool hamiltonian_smooth_at(const DiscontinuousSystem& dsys, const Vector& q,
                           double rel_tol) {
  if (!dsys.plus || !dsys.minus) return false;
  const Matrix gp = dsys.plus->system.metric(q);
  const Matrix gm = dsys.minus->system.metric(q);
  const double gscale = std::max(1.0, gp.cwiseAbs().maxCoeff());
  if ((gp - gm).cwiseAbs().maxCoeff() > rel_tol * gscale) return false;
  const double vp = dsys.plus->system.potential(q);
  const double vm = dsys.minus->system.potential(q);
  return std::abs(vp - vm) <= rel_tol * std::max(1.0, std::abs(vp));
}

AffineConstraintSet constraints_for(const DiscontinuousSystem& dsys,
                                    const DynamicsTag& tag) {
  const SideData& d = dsys.side(tag.source);
  switch (tag.kind) {
    case DynamicsKind::Constrained:
      return d.constraints;
    case DynamicsKind::Trace:
      return trace_constraints(d.constraints, dsys.surface);
    case DynamicsKind::InstantaneousTrace:
      if (!d.instantaneous)
        throw ConfigError("instantaneous trace requested without an "
                          "instantaneous constraint set");
      return trace_constraints(*d.instantaneous, dsys.surface);
  }
  return d.constraints;
}

VectorField field_for(const DiscontinuousSystem& dsys, Side side,
                      const DynamicsTag& tag) {
  return make_constrained_field(dsys.side(side).system,
                                constraints_for(dsys, tag));
}

Vector characteristic_direction(const DiscontinuousSystem& dsys, Side side,
                                const PhasePoint& y,
                                const TransitionConfig& config) {
  const SideData& d = dsys.side(side);
  const CompatibilityData data = compatibility(d.system, d.constraints, y.q);
  const Vector df = dsys.surface.gradient_at(y.q);
  const Vector direction = projector_P_matrix(data) * df;
  const double norm2 = direction.dot(data.cometric * direction);
  const double df2 = df.dot(data.cometric * df);
  const double tol = config.transversality_tolerance;
  if (!(df2 > 0.0) || norm2 <= tol * tol * df2)
    throw TransversalityError("characteristic_direction",
                              "P(df) vanishes: constraints are not "
                              "transversal to the critical surface");
  return direction;
}

double reflective_coefficient(const Matrix& cometric, const Vector& p,
                              const Vector& direction) {
  return -2.0 * p.dot(cometric * direction) /
         direction.dot(cometric * direction);
}

double reflective_coefficient(const DiscontinuousSystem& dsys, Side side,
                              const PhasePoint& y,
                              const TransitionConfig& config) {
  const Vector d = characteristic_direction(dsys, side, y, config);
  return reflective_coefficient(cometric_at(dsys.side(side).system, y.q), y.p,
                                d);
}

std::vector<double> energy_matching_roots(const Matrix& cometric,
                                          const Vector& p,
                                          const Vector& direction,
                                          double kinetic_target) {
  // a c^2 + b c + c0 = 0
  const double a = 0.5 * direction.dot(cometric * direction);
  const double b = p.dot(cometric * direction);
  const double c0 = 0.5 * p.dot(cometric * p) - kinetic_target;
  const double disc = b * b - 4.0 * a * c0;
  if (disc < 0.0 || !(a > 0.0)) return {};
  const double root = std::sqrt(disc);
  const double qq = -0.5 * (b + std::copysign(root, b));
  std::vector<double> roots;
  roots.push_back(qq / a);
  roots.push_back(qq != 0.0 ? c0 / qq : 0.0);
  std::sort(roots.begin(), roots.end());
  if (disc == 0.0 || roots[0] == roots[1]) roots.pop_back();
  return roots;
}

std::vector<double> refractive_coefficients(const DiscontinuousSystem& dsys,
                                            Side from_side,
                                            const PhasePoint& y,
                                            const TransitionConfig& config) {
  const Side to = opposite(from_side);
  if (!dsys.has_side(to))
    throw ConfigError("refraction into a wall is undefined");
  const Vector d = characteristic_direction(dsys, from_side, y, config);
  const MechanicalSystem& from = dsys.side(from_side).system;
  const MechanicalSystem& target = dsys.side(to).system;
  const double kinetic_target = hamiltonian(from, y) - target.potential(y.q);
  return energy_matching_roots(cometric_at(target, y.q), y.p, d,
                               kinetic_target);
}

namespace {

struct Visited {
  PhasePoint x;
  Side side;
};

bool same_point(const PhasePoint& a, const PhasePoint& b, double tol) {
  const double scale = std::max(1.0, a.p.cwiseAbs().maxCoeff());
  return (a.p - b.p).cwiseAbs().maxCoeff() <= tol * scale &&
         (a.q - b.q).cwiseAbs().maxCoeff() <= tol * std::max(1.0, a.q.cwiseAbs().maxCoeff());
}

bool seen(const std::vector<Visited>& visited, const PhasePoint& x, Side side,
          double tol) {
  return std::any_of(visited.begin(), visited.end(), [&](const Visited& v) {
    return v.side == side && same_point(v.x, x, tol);
  });
}

const AffineConstraintSet& crossing_set(const SideData& d) {
  return d.instantaneous ? *d.instantaneous : d.constraints;
}

DynamicsTag falling_tag(const DiscontinuousSystem& dsys, Side source) {
  return {dsys.side(source).instantaneous ? DynamicsKind::InstantaneousTrace
                                          : DynamicsKind::Trace,
          source};
}

DecisiveBranch classified(const DiscontinuousSystem& dsys, PhasePoint u,
                          Side side, DynamicsTag tag, int length,
                          const TransitionConfig& config) {
  const BoundaryClassification cls =
      classify_boundary(field_for(dsys, side, tag), u, dsys.surface, side,
                        config.classification);
  return DecisiveBranch{std::move(u), side, tag, cls, length};
}

void require_smooth(const DiscontinuousSystem& dsys, const char* op) {
  if (!dsys.plus || !dsys.minus)
    throw ConfigError(std::string(op) + " needs both sides present");
}

TransitionResult follow_constraint_change(const DiscontinuousSystem& dsys,
                                          const ImpactState& impact,
                                          const TransitionConfig& config) {
  TransitionResult result{TransitionRegime::ElasticConstraintChange, {}};
  const Side source = opposite(impact.active_constraints);
  const SideData& target = dsys.side(source);
  const PhasePoint u =
      focusing_point(target.system, crossing_set(target), impact.y);
  const DynamicsTag tag{DynamicsKind::Constrained, source};
  for (Side s : {opposite(impact.side), impact.side}) {
    DecisiveBranch branch = classified(dsys, u, s, tag, 2, config);
    if (branch.classification.decisive()) {
      result.branches.push_back(std::move(branch));
      break;
    }
  }
  return result;
}

}  // namespace

TransitionResult decisive_elastic_constraint_change(
    const DiscontinuousSystem& dsys, const ImpactState& impact,
    const TransitionConfig& config) {
  require_smooth(dsys, "decisive_elastic_constraint_change");
  if (dsys.constraints_follow_transition)
    return follow_constraint_change(dsys, impact, config);

  TransitionResult result{TransitionRegime::ElasticConstraintChange, {}};
  std::vector<Visited> visited{{impact.y, impact.side}};
  PhasePoint current = impact.y;
  Side side = impact.side;
  for (int it = 0; it < config.max_iterations; ++it) {
    const Side next = opposite(side);
    const SideData& d = dsys.side(next);
    PhasePoint u = focusing_point(d.system, crossing_set(d), current);
    if (seen(visited, u, next, config.cycle_tolerance)) return result;
    DecisiveBranch branch =
        classified(dsys, u, next, {DynamicsKind::Constrained, next}, it + 2,
                   config);
    if (branch.classification.decisive()) {
      result.branches.push_back(std::move(branch));
      return result;
    }
    if (kinetic_energy(d.system, u) < config.energy_floor) return result;
    visited.push_back({u, next});
    current = std::move(u);
    side = next;
  }
  throw UndecidedError("decisive_elastic_constraint_change",
                       "admissible sequence exceeded the iteration cap");
}

namespace {

bool smooth_linear_constraints(const DiscontinuousSystem& dsys,
                               const Vector& q) {
  for (Side s : {Side::Minus, Side::Plus}) {
    if (!dsys.has_side(s)) continue;
    const SideData& d = dsys.side(s);
    if (d.instantaneous || !d.constraints.is_linear_at(q)) return false;
  }
  if (dsys.plus && dsys.minus) {
    // Same momentum fiber on both sides: rows of J G span the same space.
    const AffineConstraintSet& a = dsys.plus->constraints;
    const AffineConstraintSet& b = dsys.minus->constraints;
    if (a.count() != b.count()) return false;
    if (a.count() > 0) {
      Matrix stacked(2 * a.count(), a.dimension());
      stacked << a.rows_at(q) * cometric_at(dsys.plus->system, q),
          b.rows_at(q) * cometric_at(dsys.minus->system, q);
      if (numerical_rank(stacked) != a.count()) return false;
    }
  }
  return true;
}

}  // namespace

TransitionResult decisive_elastic_discontinuous_H(
    const DiscontinuousSystem& dsys, const ImpactState& impact,
    const TransitionConfig& config) {
  TransitionResult result{TransitionRegime::ElasticDiscontinuousHamiltonian,
                          {}};
  const Vector& q = impact.y.q;

  if (smooth_linear_constraints(dsys, q)) {
    // Decisive points are the in/trapping points of the characteristic on
    // the energy levels; no focusing moves them.
    const Side s = impact.side;
    const Vector d = characteristic_direction(dsys, s, impact.y, config);
    const Matrix G = cometric_at(dsys.side(s).system, q);
    std::vector<std::pair<PhasePoint, Side>> candidates;
    candidates.push_back(
        {{q, impact.y.p + reflective_coefficient(G, impact.y.p, d) * d}, s});
    if (dsys.has_side(opposite(s)))
      for (double c : refractive_coefficients(dsys, s, impact.y, config))
        candidates.push_back({{q, impact.y.p + c * d}, opposite(s)});
    for (auto& [x, side] : candidates) {
      DecisiveBranch branch = classified(
          dsys, x, side, {DynamicsKind::Constrained, side}, 2, config);
      if (branch.classification.decisive())
        result.branches.push_back(std::move(branch));
    }
    return result;
  }

  struct Node {
    PhasePoint x;
    Side side;
    int length;
  };
  std::deque<Node> frontier{{impact.y, impact.side, 1}};
  std::vector<Visited> visited{{impact.y, impact.side}};
  int expansions = 0;
  while (!frontier.empty()) {
    if (expansions++ >= config.max_iterations)
      throw UndecidedError("decisive_elastic_discontinuous_H",
                           "admissible sequence exceeded the iteration cap");
    const Node node = frontier.front();
    frontier.pop_front();
    const Side s = node.side;
    const SideData& here = dsys.side(s);
    const Vector d = characteristic_direction(dsys, s, node.x, config);
    const Matrix G = cometric_at(here.system, q);

    std::vector<std::pair<PhasePoint, Side>> ends;
    for (double c : {reflective_coefficient(G, node.x.p, d), 0.0}) {
      PhasePoint u = focusing_point(here.system, crossing_set(here),
                                    {q, node.x.p + c * d});
      if (c == 0.0 && same_point(u, node.x, config.cycle_tolerance)) continue;
      ends.push_back({std::move(u), s});
    }
    if (dsys.has_side(opposite(s))) {
      const SideData& there = dsys.side(opposite(s));
      const double kinetic_target =
          hamiltonian(here.system, node.x) - there.system.potential(q);
      for (double c : energy_matching_roots(cometric_at(there.system, q),
                                            node.x.p, d, kinetic_target))
        ends.push_back({focusing_point(there.system, crossing_set(there),
                                       {q, node.x.p + c * d}),
                        opposite(s)});
    }

    for (auto& [u, side] : ends) {
      if (seen(visited, u, side, config.cycle_tolerance)) continue;
      visited.push_back({u, side});
      DecisiveBranch branch = classified(
          dsys, u, side, {DynamicsKind::Constrained, side}, node.length + 1,
          config);
      if (branch.classification.decisive())
        result.branches.push_back(std::move(branch));
      else if (kinetic_energy(dsys.side(side).system, u) >= config.energy_floor)
        frontier.push_back({u, side, node.length + 1});
    }
  }
  return result;
}

TransitionResult decisive_inelastic_constraint_change(
    const DiscontinuousSystem& dsys, const ImpactState& impact,
    const TransitionConfig& config) {
  require_smooth(dsys, "decisive_inelastic_constraint_change");
  TransitionResult result{TransitionRegime::InelasticConstraintChange, {}};
  const Side source = dsys.constraints_follow_transition
                          ? opposite(impact.active_constraints)
                          : opposite(impact.side);
  const Side landing = opposite(impact.side);
  const DynamicsTag tag = falling_tag(dsys, source);
  const PhasePoint u = focusing_point(dsys.side(source).system,
                                      constraints_for(dsys, tag), impact.y);
  result.branches.push_back(classified(dsys, u, landing, tag, 2, config));
  return result;
}

TransitionResult decisive_inelastic_discontinuous_H(
    const DiscontinuousSystem& dsys, const ImpactState& impact,
    const TransitionConfig& config) {
  TransitionResult result{TransitionRegime::InelasticDiscontinuousHamiltonian,
                          {}};
  const Side s = impact.side;
  const Vector& q = impact.y.q;
  const Vector d = characteristic_direction(dsys, s, impact.y, config);
  const SideData& here = dsys.side(s);
  const Matrix G = cometric_at(here.system, q);

  std::vector<Visited> found;
  auto add = [&](PhasePoint u, Side side, DynamicsTag tag) {
    if (seen(found, u, side, config.cycle_tolerance)) return;
    found.push_back({u, side});
    result.branches.push_back(classified(dsys, std::move(u), side, tag, 2,
                                         config));
  };

  const DynamicsTag reflected = falling_tag(dsys, s);
  const AffineConstraintSet reflected_set = constraints_for(dsys, reflected);
  for (double c : {0.0, reflective_coefficient(G, impact.y.p, d)})
    add(focusing_point(here.system, reflected_set, {q, impact.y.p + c * d}), s,
        reflected);

  if (dsys.has_side(opposite(s))) {
    const DynamicsTag refracted = falling_tag(dsys, opposite(s));
    const AffineConstraintSet refracted_set = constraints_for(dsys, refracted);
    const MechanicalSystem& there = dsys.side(opposite(s)).system;
    for (double c : refractive_coefficients(dsys, s, impact.y, config))
      add(focusing_point(there, refracted_set, {q, impact.y.p + c * d}),
          opposite(s), refracted);
  }
  return result;
}

TransitionResult transition(const DiscontinuousSystem& dsys,
                            const ImpactState& impact,
                            const TransitionConfig& config) {
  const bool smooth =
      hamiltonian_smooth_at(dsys, impact.y.q, config.hamiltonian_match_tolerance);
  if (dsys.mode == ImpactMode::Elastic)
    return smooth ? decisive_elastic_constraint_change(dsys, impact, config)
                  : decisive_elastic_discontinuous_H(dsys, impact, config);
  return smooth ? decisive_inelastic_constraint_change(dsys, impact, config)
                : decisive_inelastic_discontinuous_H(dsys, impact, config);
}

}  // namespace nhimpact
