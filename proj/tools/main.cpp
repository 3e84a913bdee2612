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

#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nhimpact/driver.hpp"
#include "nhimpact/scenarios.hpp"

namespace {

struct Flags {
  std::string scenario, config, q0, p0, side, mode, output_dir;
  std::vector<std::string> params;
  double t_end = -1.0, dt = -1.0;
  int max_branches = 0;
  bool validate_only = false;
};

void add_flags(CLI::App* app, Flags& f) {
  app->add_option("--scenario", f.scenario, "built-in scenario name");
  app->add_option("--config", f.config, "JSON run configuration");
  app->add_option("--q0", f.q0, "initial configuration, comma separated");
  app->add_option("--p0", f.p0, "initial momentum, comma separated");
  app->add_option("--side", f.side, "initial side, + or -");
  app->add_option("--mode", f.mode, "elastic or inelastic")
      ->check(CLI::IsMember({"elastic", "inelastic"}));
  app->add_option("--t-end", f.t_end, "final time");
  app->add_option("--dt", f.dt, "integration step");
  app->add_option("--output-dir", f.output_dir, "directory for output files");
  app->add_option("--param", f.params, "scenario parameter, name=value");
  app->add_option("--max-branches", f.max_branches, "branch cap");
  app->add_flag("--validate-only", f.validate_only,
                "check the configuration and exit");
}

nhimpact::RunConfig to_config(const Flags& f) {
  using namespace nhimpact;
  RunConfig c = f.config.empty() ? RunConfig{} : load_run_config(f.config);
  if (!f.scenario.empty()) {
    c.scenario = f.scenario;
    c.system.reset();
  }
  for (const auto& kv : f.params) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw ConfigError("--param expects name=value, got '" + kv + "'");
    const Vector v = parse_vector_list(kv.substr(eq + 1));
    if (v.size() != 1) throw ConfigError("--param value must be one number");
    c.parameters[kv.substr(0, eq)] = v[0];
  }
  if (!f.q0.empty()) c.q0 = parse_vector_list(f.q0);
  if (!f.p0.empty()) c.p0 = parse_vector_list(f.p0);
  if (!f.side.empty()) c.side = parse_side(f.side);
  if (!f.mode.empty()) c.mode = parse_mode(f.mode);
  if (f.t_end >= 0.0) c.t_end = f.t_end;
  if (f.dt > 0.0) c.integration.dt = f.dt;
  if (!f.output_dir.empty()) c.output_dir = f.output_dir;
  if (f.max_branches > 0) c.max_branches = f.max_branches;
  return c;
}

int do_validate(const nhimpact::RunConfig& c) {
  const nhimpact::ValidationReport report = nhimpact::validate(c);
  report.print(std::cout);
  return report.ok() ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Impacts with affine nonholonomic constraints"};
  app.require_subcommand(1);
  Flags run_flags, validate_flags;
  CLI::App* run_cmd = app.add_subcommand("run", "integrate with transitions");
  CLI::App* validate_cmd = app.add_subcommand("validate", "check a configuration");
  CLI::App* list_cmd = app.add_subcommand("scenarios", "list built-in scenarios");
  add_flags(run_cmd, run_flags);
  add_flags(validate_cmd, validate_flags);
  CLI11_PARSE(app, argc, argv);

  try {
    if (list_cmd->parsed()) {
      for (const auto& name : nhimpact::scenario_names()) std::cout << name << "\n";
      return 0;
    }
    if (validate_cmd->parsed()) return do_validate(to_config(validate_flags));

    const nhimpact::RunConfig c = to_config(run_flags);
    if (run_flags.validate_only) return do_validate(c);
    const nhimpact::RunSummary s = nhimpact::run_to_files(c, std::cerr);
    std::cerr << "events " << s.events << ", branches " << s.branches_started
              << ", trapped " << s.branches_trapped << ", pruned "
              << s.branches_pruned << ", rows " << s.trajectory_rows << "\n";
    return 0;
  } catch (const nhimpact::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const nhimpact::NumericalError& e) {
    std::cerr << "numerical error in " << e.operation() << ": " << e.what() << "\n";
    return 3;
  }
}
