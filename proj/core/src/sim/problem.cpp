#include "pgso/sim/problem.hpp"

#include <string>

#include "pgso/errors.hpp"

namespace pgso::sim {

std::string to_string(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::three_hump:
      return "three_hump";
    case ProblemKind::rosenbrock:
      return "rosenbrock";
    case ProblemKind::submanifold_hump:
      return "submanifold_hump";
    case ProblemKind::external:
      return "external";
  }
  return "unknown";
}

ProblemKind problem_kind_from_string(const std::string& s) {
  if (s == "three_hump") return ProblemKind::three_hump;
  if (s == "rosenbrock") return ProblemKind::rosenbrock;
  if (s == "submanifold_hump") return ProblemKind::submanifold_hump;
  if (s == "external") return ProblemKind::external;
  throw ConfigError("unknown problem '" + s + "'");
}

std::string to_string(XMode mode) {
  return mode == XMode::fixed ? "fixed" : "parameterized";
}

XMode x_mode_from_string(const std::string& s) {
  if (s == "fixed") return XMode::fixed;
  if (s == "parameterized") return XMode::parameterized;
  throw ConfigError("unknown x mode '" + s + "'");
}

void XDistribution::validate() const {
  if (lower.size() != upper.size()) {
    throw DimensionError("x distribution: bound vectors differ in length");
  }
  for (std::size_t d = 0; d < lower.size(); ++d) {
    if (!(lower[d] < upper[d])) {
      throw ConfigError("x distribution: lower bound " + std::to_string(lower[d]) +
                        " is not below upper bound " + std::to_string(upper[d]) +
                        " for coordinate " + std::to_string(d));
    }
  }
}

Tensor XDistribution::sample(std::size_t n, Rng& rng) const {
  Tensor xs = Tensor::matrix(n, dim());
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t d = 0; d < dim(); ++d) {
      const double u = lower[d] + (upper[d] - lower[d]) * unit(rng);
      xs.at(i, d) = family == Family::uniform ? u : u + normal(rng);
    }
  }
  return xs;
}

std::vector<double> XDistribution::mean() const {
  std::vector<double> m(dim());
  for (std::size_t d = 0; d < dim(); ++d) m[d] = 0.5 * (lower[d] + upper[d]);
  return m;
}

Tensor Problem::simulate(std::span<const double> psi, const Tensor& xs,
                         Rng& rng) const {
  if (psi.size() != psi_dim) {
    throw DimensionError(name + ": psi has " + std::to_string(psi.size()) +
                         " entries, expected " + std::to_string(psi_dim));
  }
  if (xs.cols() != x_dim) {
    throw DimensionError(name + ": x rows have " + std::to_string(xs.cols()) +
                         " entries, expected " + std::to_string(x_dim));
  }
  if (!simulator) throw ConfigError(name + ": no simulator attached");
  Tensor ys = simulator->simulate(psi, xs, rng);
  if (ys.rows() != xs.rows()) {
    throw SimulatorFault(name + ": simulator returned " +
                         std::to_string(ys.rows()) + " rows for " +
                         std::to_string(xs.rows()) + " inputs");
  }
  return ys;
}

}  // namespace pgso::sim
