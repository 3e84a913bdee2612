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

#include "nhimpact/geometry.hpp"

#include <cmath>
#include <numbers>
#include <set>

namespace nhimpact {

ConfigChart::ConfigChart(std::vector<std::string> names,
                         std::vector<bool> wrap_flags)
    : names_(std::move(names)), wrap_(std::move(wrap_flags)) {
  if (names_.empty()) throw ConfigError("chart needs at least one coordinate");
  if (wrap_.empty()) wrap_.assign(names_.size(), false);
  if (wrap_.size() != names_.size())
    throw ConfigError("chart wrap flags do not match coordinate count");
  std::set<std::string> seen(names_.begin(), names_.end());
  if (seen.size() != names_.size())
    throw ConfigError("chart coordinate names must be unique");
}

ConfigChart ConfigChart::numbered(int n) {
  std::vector<std::string> names;
  for (int i = 1; i <= n; ++i) names.push_back("q" + std::to_string(i));
  return ConfigChart(std::move(names));
}

int ConfigChart::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < names_.size(); ++i)
    if (names_[i] == name) return static_cast<int>(i);
  return -1;
}

Vector ConfigChart::wrap_for_output(const Vector& q) const {
  Vector out = q;
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  for (int i = 0; i < dimension(); ++i) {
    if (!wrap_[i]) continue;
    double a = std::fmod(q[i] + std::numbers::pi, kTwoPi);
    if (a <= 0.0) a += kTwoPi;
    out[i] = a - std::numbers::pi;
  }
  return out;
}

MechanicalSystem MechanicalSystem::with_constant_metric(
    ConfigChart chart, const Matrix& g, ScalarField potential,
    std::optional<CovectorField> potential_gradient) {
  const int n = chart.dimension();
  if (g.rows() != n || g.cols() != n)
    throw ConfigError("metric size does not match chart dimension");
  MechanicalSystem system{std::move(chart), [g](const Vector&) { return g; },
                          std::move(potential), std::nullopt,
                          std::move(potential_gradient)};
  system.metric_derivative = [n](const Vector&) {
    return std::vector<Matrix>(n, Matrix::Zero(n, n));
  };
  if (!system.potential) {
    system.potential = [](const Vector&) { return 0.0; };
    system.potential_gradient = [n](const Vector&) {
      return Vector::Zero(n).eval();
    };
  }
  return system;
}

Matrix cometric_at(const MechanicalSystem& system, const Vector& q) {
  const Matrix g = system.metric(q);
  const int n = system.dimension();
  if (g.rows() != n || g.cols() != n)
    throw SingularMetricError("cometric_at", "metric has wrong shape");
  if (!g.allFinite())
    throw SingularMetricError("cometric_at", "metric has non-finite entries");
  const Matrix sym = 0.5 * (g + g.transpose());
  if ((g - sym).cwiseAbs().maxCoeff() > 1e-10 * (1.0 + g.cwiseAbs().maxCoeff()))
    throw SingularMetricError("cometric_at", "metric is not symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (lo <= 0.0)
    throw SingularMetricError("cometric_at", "metric is not positive-definite");
  if (hi / lo > system.condition_bound)
    throw SingularMetricError("cometric_at",
                              "metric condition number exceeds bound");
  Matrix inv = sym.llt().solve(Matrix::Identity(n, n));
  return 0.5 * (inv + inv.transpose());
}

double kinetic_energy(const MechanicalSystem& system, const PhasePoint& x) {
  const Matrix G = cometric_at(system, x.q);
  return 0.5 * x.p.dot(G * x.p);
}

double hamiltonian(const MechanicalSystem& system, const PhasePoint& x) {
  return kinetic_energy(system, x) + system.potential(x.q);
}

Vector anti_legendre(const MechanicalSystem& system, const PhasePoint& x) {
  return cometric_at(system, x.q) * x.p;
}

Vector legendre(const MechanicalSystem& system, const Vector& q,
                const Vector& v) {
  return system.metric(q) * v;
}

std::vector<Matrix> metric_derivative_at(const MechanicalSystem& system,
                                         const Vector& q) {
  if (system.metric_derivative) return (*system.metric_derivative)(q);
  const int n = system.dimension();
  const double h = config_fd_step(q);
  std::vector<Matrix> out;
  out.reserve(n);
  for (int c = 0; c < n; ++c) {
    Vector plus = q, minus = q;
    plus[c] += h;
    minus[c] -= h;
    out.push_back((system.metric(plus) - system.metric(minus)) / (2.0 * h));
  }
  return out;
}

Vector potential_gradient_at(const MechanicalSystem& system, const Vector& q) {
  if (system.potential_gradient) return (*system.potential_gradient)(q);
  const int n = system.dimension();
  const double h = config_fd_step(q);
  Vector grad(n);
  for (int c = 0; c < n; ++c) {
    Vector plus = q, minus = q;
    plus[c] += h;
    minus[c] -= h;
    grad[c] = (system.potential(plus) - system.potential(minus)) / (2.0 * h);
  }
  return grad;
}

}  // namespace nhimpact
