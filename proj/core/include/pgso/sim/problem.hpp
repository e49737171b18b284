#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "pgso/nn/tensor.hpp"
#include "pgso/sim/objective.hpp"
#include "pgso/sim/rng.hpp"

namespace pgso::sim {

using nn::Tensor;

enum class ProblemKind { three_hump, rosenbrock, submanifold_hump, external };
enum class XMode { fixed, parameterized };

std::string to_string(ProblemKind kind);
ProblemKind problem_kind_from_string(const std::string& s);
std::string to_string(XMode mode);
XMode x_mode_from_string(const std::string& s);

/// Input distribution q(x).
///
/// `uniform`: x_d ~ U[lower_d, upper_d].
/// `gaussian_uniform_mean`: x_d ~ N(mu, 1) with mu ~ U[lower_d, upper_d],
/// mu drawn per sample (the Rosenbrock input).
struct XDistribution {
  enum class Family { uniform, gaussian_uniform_mean };

  Family family = Family::uniform;
  std::vector<double> lower;
  std::vector<double> upper;

  std::size_t dim() const { return lower.size(); }
  void validate() const;
  /// n x dim matrix of draws.
  Tensor sample(std::size_t n, Rng& rng) const;
  /// E[x_d] for each coordinate.
  std::vector<double> mean() const;

  bool operator==(const XDistribution&) const = default;
};

/// A black-box stochastic forward process y ~ p(y | psi, x).
class Simulator {
 public:
  virtual ~Simulator() = default;
  /// One y row per x row.
  virtual Tensor simulate(std::span<const double> psi, const Tensor& xs,
                          Rng& rng) = 0;
};

/// Full description of one optimization problem class.
struct Problem {
  ProblemKind kind = ProblemKind::three_hump;
  std::string name;
  std::size_t psi_dim = 0;
  std::size_t x_dim = 0;
  std::size_t y_dim = 1;
  double tau = 0.0;
  double epsilon_default = 0.5;
  std::vector<double> psi0;
  /// psi points per simulator call.
  std::size_t M = 1;
  /// x draws per psi point.
  std::size_t N = 3000;
  XMode x_mode = XMode::fixed;
  XDistribution x_canonical;
  ObjectiveSpec objective;
  std::shared_ptr<Simulator> simulator;

  Tensor simulate(std::span<const double> psi, const Tensor& xs,
                  Rng& rng) const;
};

}  // namespace pgso::sim
