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

#include <map>
#include <string>
#include <vector>

#include "nhimpact/impact.hpp"

namespace nhimpact {

struct Scenario {
  std::string name;
  std::map<std::string, double> parameters;
  DiscontinuousSystem system;
  // Closed-form constants for the given parameters, keyed by name.
  std::map<std::string, double> reference_values;
  Side default_side = Side::Minus;
};

// Sphere of unit mass rolling on a plane. Coordinates (x, y, q1, q2, q3),
// q^i quasi-coordinates of the angular velocity, metric diag(1,1,k2,k2,k2).
// Free (smooth plane) for x < 0, rolling for x > 0.
Scenario rolling_sphere_rough(double r = 1.0, double k2 = 0.4);

// Rolling sphere confined to x < d; at the wall the contact point cannot
// slip vertically (ydot - r wz = 0).
Scenario sphere_wall(double r = 1.0, double k2 = 0.4, double d = 1.0);

// Rolling sphere on a table spinning at omega_minus where x < y and at
// omega_plus where x > y.
Scenario rotating_table(double r = 1.0, double k2 = 0.4,
                        double omega_minus = 1.0, double omega_plus = 2.0);

// Two rolling wheels on a line joined by a telescopic rod of length
// sqrt((r2-r1)^2 + (x2-x1)^2) kept within [a, b]. Coordinates
// (x1, x2, theta1, theta2).
Scenario two_wheeled(double r1 = 1.0, double r2 = 2.0, double a = 1.5,
                     double b = 3.0);

const std::vector<std::string>& scenario_names();

// Unknown names or parameters raise ConfigError. Missing parameters take
// the builder defaults.
Scenario scenario_by_name(const std::string& name,
                          const std::map<std::string, double>& parameters = {});

// Rolling rows for the sphere: xdot - r w_y = 0, ydot + r w_x = 0.
Matrix sphere_rolling_rows(double r);

}  // namespace nhimpact
