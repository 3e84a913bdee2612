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

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nhimpact/impact.hpp"

namespace nhimpact {

// Entries are expression strings over the coordinate names.
struct SideSpec {
  std::vector<std::vector<std::string>> metric;
  std::string potential = "0";
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> affine;  // empty: linear
  // Extra rows imposed only at the crossing, appended to rows.
  std::vector<std::vector<std::string>> instantaneous_rows;
  std::vector<std::string> instantaneous_affine;
};

struct SystemSpec {
  std::vector<std::string> coordinates;
  std::vector<std::string> angular;
  std::string surface;
  std::optional<SideSpec> minus;  // absent: wall
  std::optional<SideSpec> plus;
  bool constraints_follow_transition = false;
};

struct RunConfig {
  std::string scenario;
  std::map<std::string, double> parameters;
  std::optional<SystemSpec> system;

  std::optional<Vector> q0;
  std::optional<Vector> p0;
  std::optional<Side> side;        // scenario default when absent
  std::optional<ImpactMode> mode;  // scenario default when absent

  double t_end = 1.0;
  IntegrationConfig integration;
  TransitionConfig transition;
  int max_branches = 8;
  long max_events = 10000;

  std::string output_dir = ".";
  std::string trajectory_file = "trajectory.csv";
  std::string events_file = "events.jsonl";

  // Structural checks only; the system itself is checked by build_system.
  void validate() const;
};

RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::string& path);

Vector parse_vector_list(const std::string& text);
Side parse_side(const std::string& text);
ImpactMode parse_mode(const std::string& text);

DiscontinuousSystem build_system(const RunConfig& config);
DiscontinuousSystem build_inline_system(const SystemSpec& spec);

struct ValidationCheck {
  std::string name;
  bool passed = true;
  std::string detail;
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;

  bool ok() const;
  void print(std::ostream& out) const;
};

ValidationReport validate(const RunConfig& config);

struct RunSummary {
  long events = 0;
  int branches_started = 0;
  int branches_trapped = 0;
  int branches_pruned = 0;
  long trajectory_rows = 0;
};

// Trajectory CSV and JSONL event log are written to the given streams.
RunSummary run(const RunConfig& config, std::ostream& trajectory,
               std::ostream& events, std::ostream& log);

// Same, writing into config.output_dir.
RunSummary run_to_files(const RunConfig& config, std::ostream& log);

// %.17g; non-finite values as nan/inf.
std::string format_number(double value);

}  // namespace nhimpact
