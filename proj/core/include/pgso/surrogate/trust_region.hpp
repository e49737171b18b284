#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "pgso/nn/tensor.hpp"
#include "pgso/sim/rng.hpp"

namespace pgso::surrogate {

using nn::Tensor;

/// Axis-aligned box of half-width `epsilon` around `center`.
struct TrustRegion {
  std::vector<double> center;
  double epsilon = 0.5;

  std::size_t dim() const { return center.size(); }
  bool contains(std::span<const double> psi) const;
};

/// Latin hypercube design inside the box: per coordinate the box is cut into
/// M equal strata and every stratum holds exactly one of the M points.
/// Coordinates are paired by independent random permutations. Returns M x d.
Tensor lhs_sample_psi(const TrustRegion& region, std::size_t M, Rng& rng);

}  // namespace pgso::surrogate
