#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "pgso/nn/tensor.hpp"
#include "pgso/sim/problem.hpp"
#include "pgso/sim/rng.hpp"

namespace pgso::sim {

/// h(psi) = 2 psi1^2 - 1.05 psi1^4 + psi1^6 / 6 + psi1 psi2 + psi2^2.
double three_hump_h(std::span<const double> psi);

/// P(i = 1) = clip(psi1 / ||psi||, 0, 1). Throws on psi = 0.
double three_hump_mixture_weight(std::span<const double> psi);

/// Per x row: component i ~ Bernoulli, mu ~ N(x_i h(psi), 1), y ~ N(mu, 1).
Tensor simulate_three_hump(std::span<const double> psi, const Tensor& xs,
                           Rng& rng);

double sigmoid(double x);
/// Mean of sigmoid(y - 10) - sigmoid(y) over a non-empty sample.
double hump_objective(std::span<const double> ys);

/// sum_{i<n} (psi_{i+1} - psi_i^2)^2 + (psi_i - 1)^2
double rosenbrock_gamma(std::span<const double> psi);
/// y ~ N(gamma(psi) + x, 1) for scalar x rows.
Tensor simulate_rosenbrock(std::span<const double> psi, const Tensor& xs,
                           Rng& rng);

/// Fixed embedding psi_hat = B tanh(A psi) with orthonormal rows in A, B.
struct SubmanifoldEmbedding {
  nn::Tensor A;  // 16 x 40
  nn::Tensor B;  // 2 x 16
  std::uint64_t seed = 0;

  static SubmanifoldEmbedding generate(std::uint64_t seed,
                                       std::size_t psi_dim = 40,
                                       std::size_t hidden_dim = 16,
                                       std::size_t out_dim = 2);
};

std::vector<double> submanifold_embed(std::span<const double> psi,
                                      const SubmanifoldEmbedding& emb);

/// Muon-shield loss summed over the batch; radicands are clamped at 0.
double muon_objective(std::span<const double> ys, std::span<const double> charges,
                      double alpha1, double alpha2);

class ThreeHumpSimulator : public Simulator {
 public:
  Tensor simulate(std::span<const double> psi, const Tensor& xs,
                  Rng& rng) override;
};

class RosenbrockSimulator : public Simulator {
 public:
  Tensor simulate(std::span<const double> psi, const Tensor& xs,
                  Rng& rng) override;
};

/// Three Hump evaluated at the embedded parameters.
class SubmanifoldHumpSimulator : public Simulator {
 public:
  explicit SubmanifoldHumpSimulator(SubmanifoldEmbedding embedding)
      : embedding_(std::move(embedding)) {}
  Tensor simulate(std::span<const double> psi, const Tensor& xs,
                  Rng& rng) override;
  const SubmanifoldEmbedding& embedding() const { return embedding_; }

 private:
  SubmanifoldEmbedding embedding_;
};

Problem make_three_hump(XMode mode = XMode::fixed);
Problem make_rosenbrock(XMode mode = XMode::fixed);
Problem make_submanifold_hump(XMode mode, std::uint64_t embedding_seed);
Problem make_submanifold_hump(XMode mode, SubmanifoldEmbedding embedding);

/// Orders a drawn (lower, upper) pair; an inverted draw is swapped.
std::pair<double, double> ordered_bounds(double lower, double upper);

/// Per-episode input distribution: canonical bounds in fixed mode, freshly
/// drawn bounds in parameterized mode (inverted pairs are swapped).
XDistribution sample_parameterized_bounds(const Problem& problem, Rng& rng);

/// Monte-Carlo E[L(y)] with fresh samples. Not a simulator call.
double oracle_expected_loss(const Problem& problem, std::span<const double> psi,
                            const XDistribution& xdist, Rng& rng,
                            std::size_t samples = 10000);

}  // namespace pgso::sim
