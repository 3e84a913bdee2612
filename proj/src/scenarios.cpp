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

#include "nhimpact/scenarios.hpp"

#include <cmath>

namespace nhimpact {

namespace {

ConfigChart sphere_chart() {
  return ConfigChart({"x", "y", "q1", "q2", "q3"});
}

Matrix sphere_metric(double k2) {
  Vector diag(5);
  diag << 1.0, 1.0, k2, k2, k2;
  return diag.asDiagonal();
}

void require_positive(double value, const char* what) {
  if (!(value > 0.0) || !std::isfinite(value))
    throw ConfigError(std::string(what) + " must be positive");
}

// Rotating table constraints, J qdot + mu0 = 0 with mu0 = (W y, -W x).
AffineConstraintSet spinning_rolling(double r, double omega) {
  const Matrix rows = sphere_rolling_rows(r);
  return AffineConstraintSet(
      5, 2, [rows](const Vector&) { return rows; },
      [omega](const Vector& q) {
        Vector mu(2);
        mu << omega * q[1], -omega * q[0];
        return mu;
      });
}

}  // namespace

Matrix sphere_rolling_rows(double r) {
  Matrix rows(2, 5);
  rows << 1, 0, 0, -r, 0,
          0, 1, r, 0, 0;
  return rows;
}

Scenario rolling_sphere_rough(double r, double k2) {
  require_positive(r, "r");
  require_positive(k2, "k2");
  const MechanicalSystem sys =
      MechanicalSystem::with_constant_metric(sphere_chart(), sphere_metric(k2));
  Scenario s;
  s.name = "rolling_sphere_rough";
  s.parameters = {{"r", r}, {"k2", k2}};
  s.system.surface = CriticalSurface{
      [](const Vector& q) { return q[0]; },
      [](const Vector& q) {
        Vector g = Vector::Zero(q.size());
        g[0] = 1.0;
        return g;
      }};
  s.system.minus = SideData{sys, AffineConstraintSet::none(5), std::nullopt};
  s.system.plus =
      SideData{sys, AffineConstraintSet::constant(sphere_rolling_rows(r)),
               std::nullopt};
  s.system.mode = ImpactMode::Elastic;
  s.default_side = Side::Minus;

  const double s2 = r * r + k2;
  s.reference_values = {
      {"B_11", s2 / k2},
      {"P_x_x", r * r / s2},
      {"P_x_q2", r * k2 / s2},
      {"P_q2_x", r / s2},
      {"P_q2_q2", k2 / s2},
  };
  return s;
}

Scenario sphere_wall(double r, double k2, double d) {
  require_positive(r, "r");
  require_positive(k2, "k2");
  require_positive(d, "d");
  const MechanicalSystem sys =
      MechanicalSystem::with_constant_metric(sphere_chart(), sphere_metric(k2));
  Matrix inst(3, 5);
  inst.topRows(2) = sphere_rolling_rows(r);
  inst.row(2) << 0, 1, 0, 0, -r;

  Scenario s;
  s.name = "sphere_wall";
  s.parameters = {{"r", r}, {"k2", k2}, {"d", d}};
  s.system.surface = CriticalSurface{
      [d](const Vector& q) { return d - q[0]; },
      [](const Vector& q) {
        Vector g = Vector::Zero(q.size());
        g[0] = -1.0;
        return g;
      }};
  s.system.plus =
      SideData{sys, AffineConstraintSet::constant(sphere_rolling_rows(r)),
               AffineConstraintSet::constant(inst)};
  s.system.mode = ImpactMode::Elastic;
  s.default_side = Side::Plus;

  const double s2 = r * r + k2;
  s.reference_values = {
      {"c_plus_2_per_px", -2.0 * s2 / (r * r)},
      {"inst_py_from_py", s2 / (r * r + 2.0 * k2)},
      {"inst_py_from_p3", r / (r * r + 2.0 * k2)},
  };
  return s;
}

Scenario rotating_table(double r, double k2, double omega_minus,
                        double omega_plus) {
  require_positive(r, "r");
  require_positive(k2, "k2");
  if (!(omega_minus < omega_plus))
    throw ConfigError("rotating_table requires omega_minus < omega_plus");
  const MechanicalSystem sys =
      MechanicalSystem::with_constant_metric(sphere_chart(), sphere_metric(k2));
  Scenario s;
  s.name = "rotating_table";
  s.parameters = {{"r", r},
                  {"k2", k2},
                  {"omega_minus", omega_minus},
                  {"omega_plus", omega_plus}};
  s.system.surface = CriticalSurface{
      [](const Vector& q) { return q[0] - q[1]; },
      [](const Vector& q) {
        Vector g = Vector::Zero(q.size());
        g[0] = 1.0;
        g[1] = -1.0;
        return g;
      }};
  s.system.minus = SideData{sys, spinning_rolling(r, omega_minus), std::nullopt};
  s.system.plus = SideData{sys, spinning_rolling(r, omega_plus), std::nullopt};
  s.system.mode = ImpactMode::Elastic;
  s.system.constraints_follow_transition = true;
  s.default_side = Side::Minus;

  // Q(Upsilon) = k2 W / (r^2 + k2) (-y, x, x r, y r, 0)
  s.reference_values = {
      {"offset_scale", k2 / (r * r + k2)},
      {"det_character_slope", k2 / (r * r + k2) * (omega_minus - omega_plus)},
  };
  return s;
}

Scenario two_wheeled(double r1, double r2, double a, double b) {
  require_positive(r1, "r1");
  require_positive(a, "a");
  if (!(r1 < r2)) throw ConfigError("two_wheeled requires r1 < r2");
  if (!(a < b)) throw ConfigError("two_wheeled requires a < b");
  if (!(a > std::abs(r2 - r1)))
    throw ConfigError("two_wheeled requires a > r2 - r1 so that l = a exists");
  const MechanicalSystem sys = MechanicalSystem::with_constant_metric(
      ConfigChart({"x1", "x2", "theta1", "theta2"},
                  {false, false, true, true}),
      Matrix::Identity(4, 4));
  Matrix rows(2, 4);
  rows << 1, 0, -r1, 0,
          0, 1, 0, -r2;

  const double dr = r2 - r1;
  auto length = [dr](const Vector& q) {
    return std::hypot(dr, q[1] - q[0]);
  };
  Scenario s;
  s.name = "two_wheeled";
  s.parameters = {{"r1", r1}, {"r2", r2}, {"a", a}, {"b", b}};
  // Signed distance to the nearer sheet, positive inside a < l < b.
  s.system.surface = CriticalSurface{
      [=](const Vector& q) {
        const double l = length(q);
        return std::min(b - l, l - a);
      },
      [=](const Vector& q) {
        const double l = length(q);
        const double dl = (q[1] - q[0]) / l;
        Vector g = Vector::Zero(q.size());
        g[0] = -dl;
        g[1] = dl;
        return Vector(b - l < l - a ? Vector(-g) : g);
      }};
  s.system.plus =
      SideData{sys, AffineConstraintSet::constant(rows), std::nullopt};
  s.system.mode = ImpactMode::Elastic;
  s.default_side = Side::Plus;

  s.reference_values = {
      {"B_11", 1.0 + r1 * r1},
      {"B_22", 1.0 + r2 * r2},
      {"P_x1_x1", r1 * r1 / (1.0 + r1 * r1)},
      {"P_x1_theta1", r1 / (1.0 + r1 * r1)},
      {"P_theta1_theta1", 1.0 / (1.0 + r1 * r1)},
      {"P_x2_x2", r2 * r2 / (1.0 + r2 * r2)},
      {"P_x2_theta2", r2 / (1.0 + r2 * r2)},
      {"P_theta2_theta2", 1.0 / (1.0 + r2 * r2)},
  };
  return s;
}

const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names = {
      "rolling_sphere_rough", "sphere_wall", "rotating_table", "two_wheeled"};
  return names;
}

Scenario scenario_by_name(const std::string& name,
                          const std::map<std::string, double>& parameters) {
  std::map<std::string, double> p;
  if (name == "rolling_sphere_rough")
    p = {{"r", 1.0}, {"k2", 0.4}};
  else if (name == "sphere_wall")
    p = {{"r", 1.0}, {"k2", 0.4}, {"d", 1.0}};
  else if (name == "rotating_table")
    p = {{"r", 1.0}, {"k2", 0.4}, {"omega_minus", 1.0}, {"omega_plus", 2.0}};
  else if (name == "two_wheeled")
    p = {{"r1", 1.0}, {"r2", 2.0}, {"a", 1.5}, {"b", 3.0}};
  else
    throw ConfigError("unknown scenario '" + name + "'");
  for (const auto& [key, value] : parameters) {
    if (!p.count(key))
      throw ConfigError("scenario " + name + " has no parameter '" + key + "'");
    p[key] = value;
  }
  if (name == "rolling_sphere_rough") return rolling_sphere_rough(p["r"], p["k2"]);
  if (name == "sphere_wall") return sphere_wall(p["r"], p["k2"], p["d"]);
  if (name == "rotating_table")
    return rotating_table(p["r"], p["k2"], p["omega_minus"], p["omega_plus"]);
  return two_wheeled(p["r1"], p["r2"], p["a"], p["b"]);
}

}  // namespace nhimpact
