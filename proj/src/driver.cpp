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

#include "nhimpact/driver.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <queue>
#include <random>
#include <sstream>

#include "json.hpp"
#include "nhimpact/expression.hpp"
#include "nhimpact/scenarios.hpp"

namespace nhimpact {

using nlohmann::json;

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

// ---- configuration -------------------------------------------------------

void RunConfig::validate() const {
  if (scenario.empty() == !system.has_value())
    throw ConfigError("exactly one of 'scenario' and 'system' must be given");
  if (!q0 || !p0) throw ConfigError("initial q and p are required");
  if (q0->size() != p0->size())
    throw ConfigError("initial q and p have different lengths");
  if (!(t_end >= 0.0) || !std::isfinite(t_end))
    throw ConfigError("t_end must be finite and non-negative");
  if (max_branches < 1) throw ConfigError("max_branches must be at least 1");
  if (max_events < 1) throw ConfigError("max_events must be at least 1");
  if (transition.max_iterations < 1)
    throw ConfigError("max_iterations must be at least 1");
  integration.validate();
}

namespace {

std::string entry_text(const json& j, const std::string& where) {
  if (j.is_number()) return format_number(j.get<double>());
  if (j.is_string()) return j.get<std::string>();
  throw ConfigError(where + ": expected a number or an expression string");
}

std::vector<std::string> text_list(const json& j, const std::string& where) {
  if (!j.is_array()) throw ConfigError(where + ": expected an array");
  std::vector<std::string> out;
  for (const auto& e : j) out.push_back(entry_text(e, where));
  return out;
}

std::vector<std::vector<std::string>> text_matrix(const json& j,
                                                  const std::string& where) {
  if (!j.is_array()) throw ConfigError(where + ": expected an array of rows");
  std::vector<std::vector<std::string>> out;
  for (const auto& row : j) out.push_back(text_list(row, where));
  return out;
}

std::vector<std::vector<std::string>> metric_from_json(const json& j, int n) {
  std::vector<std::vector<std::string>> g(n, std::vector<std::string>(n, "0"));
  if (j.is_string() && j.get<std::string>() == "identity") {
    for (int i = 0; i < n; ++i) g[i][i] = "1";
    return g;
  }
  if (j.is_object() && j.contains("diagonal")) {
    const auto d = text_list(j.at("diagonal"), "metric.diagonal");
    if (static_cast<int>(d.size()) != n)
      throw ConfigError("metric.diagonal must have one entry per coordinate");
    for (int i = 0; i < n; ++i) g[i][i] = d[i];
    return g;
  }
  return text_matrix(j, "metric");
}

SideSpec side_from_json(const json& j, int n) {
  SideSpec s;
  s.metric = metric_from_json(j.value("metric", json("identity")), n);
  if (j.contains("potential")) s.potential = entry_text(j["potential"], "potential");
  if (j.contains("constraints")) {
    const json& c = j["constraints"];
    if (c.contains("rows")) s.rows = text_matrix(c["rows"], "constraints.rows");
    if (c.contains("affine")) s.affine = text_list(c["affine"], "constraints.affine");
  }
  if (j.contains("instantaneous")) {
    const json& c = j["instantaneous"];
    if (c.contains("rows"))
      s.instantaneous_rows = text_matrix(c["rows"], "instantaneous.rows");
    if (c.contains("affine"))
      s.instantaneous_affine = text_list(c["affine"], "instantaneous.affine");
  }
  return s;
}

Vector vector_from_json(const json& j, const std::string& where) {
  if (!j.is_array()) throw ConfigError(where + ": expected an array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ConfigError(where + ": expected numbers");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

}  // namespace

Vector parse_vector_list(const std::string& text) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b == std::string::npos) throw ConfigError("empty entry in '" + text + "'");
    item = item.substr(b, e - b + 1);
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size()) throw ConfigError("bad number '" + item + "'");
    values.push_back(v);
  }
  return Eigen::Map<const Vector>(values.data(),
                                  static_cast<Eigen::Index>(values.size()));
}

Side parse_side(const std::string& text) {
  if (text == "+" || text == "plus" || text == "1" || text == "+1") return Side::Plus;
  if (text == "-" || text == "minus" || text == "-1") return Side::Minus;
  throw ConfigError("side must be '+' or '-', got '" + text + "'");
}

ImpactMode parse_mode(const std::string& text) {
  if (text == "elastic") return ImpactMode::Elastic;
  if (text == "inelastic") return ImpactMode::Inelastic;
  throw ConfigError("mode must be 'elastic' or 'inelastic', got '" + text + "'");
}

RunConfig parse_run_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  static const std::vector<std::string> known = {
      "scenario", "parameters", "system",     "initial",      "mode",
      "t_end",    "dt",         "tolerances", "max_branches", "max_events",
      "output"};
  for (const auto& [key, _] : j.items())
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw ConfigError("unknown config key '" + key + "'");

  RunConfig c;
  try {
    if (j.contains("scenario")) c.scenario = j["scenario"].get<std::string>();
    if (j.contains("parameters"))
      for (const auto& [k, v] : j["parameters"].items())
        c.parameters[k] = v.get<double>();
    if (j.contains("system")) {
      const json& s = j["system"];
      SystemSpec spec;
      spec.coordinates = s.at("coordinates").get<std::vector<std::string>>();
      if (s.contains("angular"))
        spec.angular = s["angular"].get<std::vector<std::string>>();
      spec.surface = entry_text(s.at("surface"), "surface");
      const int n = static_cast<int>(spec.coordinates.size());
      const json& sides = s.at("sides");
      if (sides.contains("minus") && !sides["minus"].is_null())
        spec.minus = side_from_json(sides["minus"], n);
      if (sides.contains("plus") && !sides["plus"].is_null())
        spec.plus = side_from_json(sides["plus"], n);
      spec.constraints_follow_transition =
          s.value("constraints_follow_transition", false);
      c.system = std::move(spec);
    }
    if (j.contains("initial")) {
      const json& init = j["initial"];
      if (init.contains("q")) c.q0 = vector_from_json(init["q"], "initial.q");
      if (init.contains("p")) c.p0 = vector_from_json(init["p"], "initial.p");
      if (init.contains("side")) c.side = parse_side(init["side"].get<std::string>());
    }
    if (j.contains("mode")) c.mode = parse_mode(j["mode"].get<std::string>());
    c.t_end = j.value("t_end", c.t_end);
    c.integration.dt = j.value("dt", c.integration.dt);
    if (j.contains("tolerances")) {
      const json& t = j["tolerances"];
      c.integration.event_tolerance = t.value("event", c.integration.event_tolerance);
      c.integration.boundary_order_tolerance =
          t.value("boundary_order", c.integration.boundary_order_tolerance);
      c.integration.max_tangency_order =
          t.value("max_tangency_order", c.integration.max_tangency_order);
      c.integration.classification_step =
          t.value("classification_step", c.integration.classification_step);
      c.integration.max_steps = t.value("max_steps", c.integration.max_steps);
      c.integration.reproject = t.value("reproject", c.integration.reproject);
      c.transition.max_iterations =
          t.value("max_iterations", c.transition.max_iterations);
      c.transition.cycle_tolerance = t.value("cycle", c.transition.cycle_tolerance);
      c.transition.energy_floor = t.value("energy_floor", c.transition.energy_floor);
      c.transition.transversality_tolerance =
          t.value("transversality", c.transition.transversality_tolerance);
      c.transition.hamiltonian_match_tolerance =
          t.value("hamiltonian_match", c.transition.hamiltonian_match_tolerance);
    }
    c.max_branches = j.value("max_branches", c.max_branches);
    c.max_events = j.value("max_events", c.max_events);
    if (j.contains("output")) {
      const json& o = j["output"];
      c.output_dir = o.value("directory", c.output_dir);
      c.trajectory_file = o.value("trajectory", c.trajectory_file);
      c.events_file = o.value("events", c.events_file);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config field has the wrong type: ") + e.what());
  }
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str());
}

// ---- inline systems ------------------------------------------------------

namespace {

using ExprMatrix = std::vector<std::vector<Expression>>;

ExprMatrix parse_matrix(const std::vector<std::vector<std::string>>& text,
                        const std::vector<std::string>& vars, int cols,
                        const std::string& where) {
  ExprMatrix m;
  for (const auto& row : text) {
    if (static_cast<int>(row.size()) != cols)
      throw ConfigError(where + ": every row needs " + std::to_string(cols) +
                        " entries");
    std::vector<Expression> r;
    for (const auto& e : row) r.push_back(Expression::parse(e, vars));
    m.push_back(std::move(r));
  }
  return m;
}

Matrix evaluate(const ExprMatrix& m, int cols, const Vector& q) {
  Matrix out(static_cast<Eigen::Index>(m.size()), cols);
  for (std::size_t i = 0; i < m.size(); ++i)
    for (int j = 0; j < cols; ++j) out(static_cast<Eigen::Index>(i), j) = m[i][j](q);
  return out;
}

std::vector<Expression> parse_list(const std::vector<std::string>& text,
                                   const std::vector<std::string>& vars,
                                   std::size_t expected,
                                   const std::string& where) {
  std::vector<Expression> out;
  if (text.empty()) {
    out.assign(expected, Expression::constant(0.0));
    return out;
  }
  if (text.size() != expected)
    throw ConfigError(where + ": needs one entry per constraint row");
  for (const auto& e : text) out.push_back(Expression::parse(e, vars));
  return out;
}

AffineConstraintSet constraint_set(const ExprMatrix& rows,
                                   const std::vector<Expression>& affine,
                                   int n) {
  const int m = static_cast<int>(rows.size());
  if (m == 0) return AffineConstraintSet::none(n);
  return AffineConstraintSet(
      n, m, [rows, n](const Vector& q) { return evaluate(rows, n, q); },
      [affine](const Vector& q) {
        Vector mu(static_cast<Eigen::Index>(affine.size()));
        for (std::size_t i = 0; i < affine.size(); ++i)
          mu[static_cast<Eigen::Index>(i)] = affine[i](q);
        return mu;
      });
}

SideData build_side(const SideSpec& spec, const ConfigChart& chart,
                    const std::string& label) {
  const auto& vars = chart.names();
  const int n = chart.dimension();
  if (static_cast<int>(spec.metric.size()) != n)
    throw ConfigError(label + " metric must be " + std::to_string(n) + "x" +
                      std::to_string(n));
  const ExprMatrix g = parse_matrix(spec.metric, vars, n, label + " metric");
  std::vector<ExprMatrix> dg(n, ExprMatrix(n, std::vector<Expression>(n)));
  for (int c = 0; c < n; ++c)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) dg[c][i][j] = g[i][j].derivative(c);
  const Expression V = Expression::parse(spec.potential, vars);
  std::vector<Expression> dV;
  for (int c = 0; c < n; ++c) dV.push_back(V.derivative(c));

  MechanicalSystem sys{
      chart,
      [g, n](const Vector& q) { return evaluate(g, n, q); },
      [V](const Vector& q) { return V(q); },
      [dg, n](const Vector& q) {
        std::vector<Matrix> out;
        for (const auto& m : dg) out.push_back(evaluate(m, n, q));
        return out;
      },
      [dV](const Vector& q) {
        Vector out(static_cast<Eigen::Index>(dV.size()));
        for (std::size_t i = 0; i < dV.size(); ++i)
          out[static_cast<Eigen::Index>(i)] = dV[i](q);
        return out;
      }};

  const ExprMatrix rows = parse_matrix(spec.rows, vars, n, label + " constraint rows");
  if (static_cast<int>(rows.size()) >= n)
    throw ConfigError(label + ": need fewer constraint rows than coordinates");
  const auto affine = parse_list(spec.affine, vars, rows.size(),
                                 label + " constraint affine part");
  SideData side{sys, constraint_set(rows, affine, n), std::nullopt};

  if (!spec.instantaneous_rows.empty()) {
    ExprMatrix all = rows;
    const ExprMatrix extra = parse_matrix(spec.instantaneous_rows, vars, n,
                                          label + " instantaneous rows");
    all.insert(all.end(), extra.begin(), extra.end());
    if (static_cast<int>(all.size()) >= n)
      throw ConfigError(label + ": too many instantaneous rows");
    auto all_affine = affine;
    const auto extra_affine = parse_list(spec.instantaneous_affine, vars,
                                         extra.size(),
                                         label + " instantaneous affine part");
    all_affine.insert(all_affine.end(), extra_affine.begin(), extra_affine.end());
    side.instantaneous = constraint_set(all, all_affine, n);
  }
  return side;
}

}  // namespace

DiscontinuousSystem build_inline_system(const SystemSpec& spec) {
  const int n = static_cast<int>(spec.coordinates.size());
  if (n < 1) throw ConfigError("system needs at least one coordinate");
  std::vector<bool> wrap(n, false);
  for (const auto& a : spec.angular) {
    const auto it = std::find(spec.coordinates.begin(), spec.coordinates.end(), a);
    if (it == spec.coordinates.end())
      throw ConfigError("angular coordinate '" + a + "' is not a coordinate");
    wrap[static_cast<std::size_t>(it - spec.coordinates.begin())] = true;
  }
  const ConfigChart chart(spec.coordinates, wrap);

  DiscontinuousSystem dsys;
  const Expression f = Expression::parse(spec.surface, spec.coordinates);
  std::vector<Expression> df;
  for (int c = 0; c < n; ++c) df.push_back(f.derivative(c));
  dsys.surface = CriticalSurface{
      [f](const Vector& q) { return f(q); },
      [df](const Vector& q) {
        Vector out(static_cast<Eigen::Index>(df.size()));
        for (std::size_t i = 0; i < df.size(); ++i)
          out[static_cast<Eigen::Index>(i)] = df[i](q);
        return out;
      }};
  if (spec.minus) dsys.minus = build_side(*spec.minus, chart, "minus side");
  if (spec.plus) dsys.plus = build_side(*spec.plus, chart, "plus side");
  dsys.constraints_follow_transition = spec.constraints_follow_transition;
  dsys.validate();
  return dsys;
}

DiscontinuousSystem build_system(const RunConfig& config) {
  DiscontinuousSystem dsys =
      config.system ? build_inline_system(*config.system)
                    : scenario_by_name(config.scenario, config.parameters).system;
  if (config.mode) dsys.mode = *config.mode;
  return dsys;
}

namespace {

// Explicit side, else the sign of f(q0), else the scenario default.
Side initial_side(const RunConfig& config, const DiscontinuousSystem& dsys) {
  if (config.side) return *config.side;
  if (config.q0 && config.q0->size() == dsys.dimension()) {
    const double f0 = dsys.surface.value(*config.q0);
    if (f0 > 0.0) return Side::Plus;
    if (f0 < 0.0) return Side::Minus;
  }
  if (config.system)
    throw ConfigError("initial point lies on the surface; set initial.side");
  return scenario_by_name(config.scenario, config.parameters).default_side;
}

}  // namespace

// ---- validation ----------------------------------------------------------

bool ValidationReport::ok() const {
  return std::all_of(checks.begin(), checks.end(),
                     [](const ValidationCheck& c) { return c.passed; });
}

void ValidationReport::print(std::ostream& out) const {
  for (const auto& c : checks)
    out << (c.passed ? "PASS " : "FAIL ") << c.name
        << (c.detail.empty() ? "" : ": " + c.detail) << "\n";
}

namespace {

std::optional<Vector> project_to_surface(const CriticalSurface& surface,
                                         Vector q) {
  for (int it = 0; it < 60; ++it) {
    const double f = surface.value(q);
    if (std::abs(f) < 1e-12) return q;
    const Vector g = surface.gradient_at(q);
    const double g2 = g.squaredNorm();
    if (!(g2 > 0.0)) return std::nullopt;
    q -= (f / g2) * g;
  }
  return std::nullopt;
}

}  // namespace

ValidationReport validate(const RunConfig& config) {
  ValidationReport report;
  auto add = [&](std::string name, bool passed, std::string detail = {}) {
    report.checks.push_back({std::move(name), passed, std::move(detail)});
  };

  try {
    config.validate();
    add("config", true);
  } catch (const ConfigError& e) {
    add("config", false, e.what());
    return report;
  }

  DiscontinuousSystem dsys;
  Side side = Side::Minus;
  try {
    dsys = build_system(config);
    side = initial_side(config, dsys);
    add("build", true);
  } catch (const ConfigError& e) {
    add("build", false, e.what());
    return report;
  }

  const Vector& q0 = *config.q0;
  if (q0.size() != dsys.dimension()) {
    add("dimension", false, "initial state has " + std::to_string(q0.size()) +
                                " entries, system has " +
                                std::to_string(dsys.dimension()));
    return report;
  }
  if (!dsys.has_side(side)) {
    add("initial_side", false, std::string("side ") + to_string(side) + " is a wall");
    return report;
  }
  const double f0 = dsys.surface.value(q0);
  add("initial_side",
      sign_of(side) * f0 >= -config.integration.event_tolerance,
      "f(q0) = " + format_number(f0));

  for (Side s : {Side::Minus, Side::Plus}) {
    if (!dsys.has_side(s)) continue;
    const SideData& d = dsys.side(s);
    const std::string label = std::string("side ") + to_string(s);
    std::vector<std::pair<std::string, const AffineConstraintSet*>> sets = {
        {"constraints", &d.constraints}};
    if (d.instantaneous) sets.push_back({"instantaneous", &*d.instantaneous});
    try {
      cometric_at(d.system, q0);
      add(label + " metric", true);
    } catch (const NumericalError& e) {
      add(label + " metric", false, e.what());
      continue;
    }
    for (const auto& [name, set] : sets) {
      if (set->count() == 0) continue;
      const Matrix rows = set->rows_at(q0);
      const int rank = numerical_rank(rows);
      add(label + " " + name + " rank", rank == set->count(),
          "rank " + std::to_string(rank) + " of " + std::to_string(set->count()));
      try {
        const CompatibilityData data = compatibility(d.system, *set, q0);
        add(label + " " + name + " compatibility", true,
            "cond(B) = " + format_number(data.condition));
      } catch (const NumericalError& e) {
        add(label + " " + name + " compatibility", false, e.what());
      }
    }
  }

  // Transversality at points of N near q0.
  std::mt19937_64 rng(20260101);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double scale = 0.25 * std::max(1.0, q0.cwiseAbs().maxCoeff());
  int sampled = 0, failed = 0;
  std::string first_failure;
  for (int k = 0; k < 16; ++k) {
    Vector guess = q0;
    if (k > 0)
      for (Eigen::Index i = 0; i < guess.size(); ++i) guess[i] += scale * normal(rng);
    const auto q = project_to_surface(dsys.surface, guess);
    if (!q) continue;
    ++sampled;
    for (Side s : {Side::Minus, Side::Plus}) {
      if (!dsys.has_side(s)) continue;
      try {
        characteristic_direction(dsys, s, PhasePoint{*q, Vector::Zero(q->size())},
                                 config.transition);
      } catch (const NumericalError& e) {
        ++failed;
        if (first_failure.empty()) first_failure = e.what();
      }
    }
  }
  if (sampled == 0)
    add("transversality", false, "no point of the critical surface found near q0");
  else
    add("transversality", failed == 0,
        std::to_string(sampled) + " surface points sampled" +
            (failed ? ", " + std::to_string(failed) + " failures: " + first_failure
                    : std::string()));
  return report;
}

// ---- simulation ----------------------------------------------------------

namespace {

class JsonLine {
 public:
  JsonLine& key(const std::string& k) {
    sep();
    out_ << '"' << k << "\":";
    fresh_ = true;
    return *this;
  }
  JsonLine& num(double v) {
    sep();
    out_ << (std::isfinite(v) ? format_number(v) : "null");
    return *this;
  }
  JsonLine& integer(long v) {
    sep();
    out_ << v;
    return *this;
  }
  JsonLine& str(const std::string& s) {
    sep();
    out_ << '"' << s << '"';
    return *this;
  }
  JsonLine& boolean(bool b) {
    sep();
    out_ << (b ? "true" : "false");
    return *this;
  }
  JsonLine& vec(const Vector& v) {
    open('[');
    for (Eigen::Index i = 0; i < v.size(); ++i) num(v[i]);
    return close(']');
  }
  JsonLine& open(char c) {
    sep();
    out_ << c;
    fresh_ = true;
    return *this;
  }
  JsonLine& close(char c) {
    out_ << c;
    fresh_ = false;
    return *this;
  }
  std::string text() const { return out_.str(); }

 private:
  void sep() {
    if (!fresh_) out_ << ',';
    fresh_ = false;
  }
  std::ostringstream out_;
  bool fresh_ = true;
};

struct Branch {
  int id = 0;
  double t = 0.0;
  PhasePoint x;
  Side side = Side::Minus;
  DynamicsTag tag;
  bool detect_events = true;
};

struct Later {
  bool operator()(const Branch& a, const Branch& b) const {
    return a.t != b.t ? a.t > b.t : a.id > b.id;
  }
};

class TrajectoryWriter {
 public:
  TrajectoryWriter(std::ostream& out, const DiscontinuousSystem& dsys)
      : out_(out), dsys_(dsys) {
    const int n = dsys.dimension();
    out_ << "t,branch,side";
    for (int i = 1; i <= n; ++i) out_ << ",q_" << i;
    for (int i = 1; i <= n; ++i) out_ << ",p_" << i;
    out_ << ",H,residual_max,f\n";
  }

  void row(double t, const Branch& b, const AffineConstraintSet& set,
           const PhasePoint& x) {
    const MechanicalSystem& sys = dsys_.side(b.side).system;
    const Vector q = sys.chart.wrap_for_output(x.q);
    const Vector r = constraint_residual(sys, set, x);
    std::string line = format_number(t) + "," + std::to_string(b.id) + "," +
                       (b.side == Side::Plus ? "1" : "-1");
    for (Eigen::Index i = 0; i < q.size(); ++i) line += "," + format_number(q[i]);
    for (Eigen::Index i = 0; i < x.p.size(); ++i) line += "," + format_number(x.p[i]);
    line += "," + format_number(hamiltonian(sys, x));
    line += "," + format_number(r.size() ? r.cwiseAbs().maxCoeff() : 0.0);
    line += "," + format_number(dsys_.surface.value(x.q));
    out_ << line << "\n";
    ++rows;
  }

  long rows = 0;

 private:
  std::ostream& out_;
  const DiscontinuousSystem& dsys_;
};

}  // namespace

RunSummary run(const RunConfig& config, std::ostream& trajectory,
               std::ostream& events, std::ostream& log) {
  config.validate();
  const DiscontinuousSystem dsys = build_system(config);
  const Side side0 = initial_side(config, dsys);
  const int n = dsys.dimension();
  if (config.q0->size() != n)
    throw ConfigError("initial state has " + std::to_string(config.q0->size()) +
                      " entries, system has " + std::to_string(n));
  if (!dsys.has_side(side0))
    throw ConfigError(std::string("initial side ") + to_string(side0) +
                      " is a wall");
  const double f0 = dsys.surface.value(*config.q0);
  if (sign_of(side0) * f0 < -config.integration.event_tolerance)
    throw ConfigError("initial configuration lies on the wrong side (f = " +
                      format_number(f0) + ")");

  TransitionConfig tconfig = config.transition;
  tconfig.classification = config.integration;

  RunSummary summary;
  TrajectoryWriter writer(trajectory, dsys);

  Branch first;
  first.side = side0;
  first.tag = {DynamicsKind::Constrained, side0};
  first.x = {*config.q0, *config.p0};
  {
    const SideData& d = dsys.side(side0);
    const Vector r = constraint_residual(d.system, d.constraints, first.x);
    const double scale = std::max(1.0, first.x.p.cwiseAbs().maxCoeff());
    if (r.size() && r.cwiseAbs().maxCoeff() > 1e-10 * scale) {
      log << "warning: initial momentum violates the constraints (residual "
          << format_number(r.cwiseAbs().maxCoeff())
          << "); using its focusing point\n";
      first.x = focusing_point(d.system, d.constraints, first.x);
    }
  }
  std::priority_queue<Branch, std::vector<Branch>, Later> queue;
  queue.push(first);
  summary.branches_started = 1;
  int next_id = 1;

  while (!queue.empty()) {
    Branch b = queue.top();
    queue.pop();
    const AffineConstraintSet set = constraints_for(dsys, b.tag);
    const VectorField field = field_for(dsys, b.side, b.tag);
    IntegrationOptions options;
    options.detect_events = b.detect_events;
    if (config.integration.reproject) {
      const MechanicalSystem sys = dsys.side(b.side).system;
      options.reproject = [sys, set](const PhasePoint& x) {
        return focusing_point(sys, set, x);
      };
    }
    const TrajectorySegment seg =
        integrate(field, b.x, dsys.surface, b.side, config.integration, b.t,
                  config.t_end, options);
    for (const auto& s : seg.samples) writer.row(s.t, b, set, s.x);
    if (seg.terminal == TerminalEvent::StepLimit)
      throw StepLimitError("integrate", "step limit reached on branch " +
                                            std::to_string(b.id));
    if (seg.terminal != TerminalEvent::BoundaryHit) continue;

    if (++summary.events > config.max_events)
      throw StepLimitError("run", "event limit of " +
                                      std::to_string(config.max_events) +
                                      " reached");
    const ImpactState impact =
        ImpactState::make(dsys, seg.hit->x, b.side, b.tag.source);
    const TransitionResult result = transition(dsys, impact, tconfig);

    const int room = config.max_branches - static_cast<int>(queue.size());
    const int keep = std::min<int>(static_cast<int>(result.branches.size()),
                                   std::max(room, 1));
    const int pruned = static_cast<int>(result.branches.size()) - keep;
    summary.branches_pruned += pruned;
    if (result.trapped()) ++summary.branches_trapped;

    JsonLine ev;
    ev.open('{')
        .key("event").integer(summary.events)
        .key("time").num(seg.hit->t)
        .key("branch").integer(b.id)
        .key("side_before").str(to_string(b.side))
        .key("impact").open('{')
        .key("q").vec(dsys.side(b.side).system.chart.wrap_for_output(impact.y.q))
        .key("p").vec(impact.y.p)
        .close('}')
        .key("energy_before").num(impact.energy)
        .key("regime").str(to_string(result.regime))
        .key("trapped").boolean(result.trapped())
        .key("pruned").integer(pruned)
        .key("branches").open('[');
    for (int k = 0; k < keep; ++k) {
      const DecisiveBranch& d = result.branches[static_cast<std::size_t>(k)];
      Branch child;
      child.id = k == 0 ? b.id : next_id++;
      if (k > 0) ++summary.branches_started;
      child.t = seg.hit->t;
      child.x = d.point;
      child.side = d.side;
      child.tag = d.dynamics;
      child.detect_events = d.dynamics.kind == DynamicsKind::Constrained &&
                            d.classification.kind ==
                                BoundaryClassification::Kind::In;
      const MechanicalSystem& sys = dsys.side(d.side).system;
      ev.open('{')
          .key("branch").integer(child.id)
          .key("side").str(to_string(d.side))
          .key("dynamics").str(to_string(d.dynamics.kind))
          .key("constraint_source").str(to_string(d.dynamics.source))
          .key("classification").str(to_string(d.classification.kind))
          .key("order").integer(d.classification.order)
          .key("q").vec(sys.chart.wrap_for_output(d.point.q))
          .key("p").vec(d.point.p)
          .key("energy_after").num(hamiltonian(sys, d.point))
          .key("sequence_length").integer(d.sequence_length)
          .close('}');
      writer.row(child.t, child, constraints_for(dsys, child.tag), child.x);
      queue.push(std::move(child));
    }
    ev.close(']').close('}');
    events << ev.text() << "\n";
    if (pruned > 0)
      log << "warning: " << pruned << " branch(es) pruned at t = "
          << format_number(seg.hit->t) << " (max_branches "
          << config.max_branches << ")\n";
  }
  summary.trajectory_rows = writer.rows;
  return summary;
}

RunSummary run_to_files(const RunConfig& config, std::ostream& log) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(config.output_dir, ec);
  if (ec)
    throw ConfigError("cannot create output directory '" + config.output_dir +
                      "': " + ec.message());
  const fs::path dir(config.output_dir);
  std::ofstream traj(dir / config.trajectory_file);
  std::ofstream ev(dir / config.events_file);
  if (!traj || !ev) throw ConfigError("cannot open output files in '" +
                                      config.output_dir + "'");
  return run(config, traj, ev, log);
}

}  // namespace nhimpact
