#include "pgso/surrogate/trust_region.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "pgso/errors.hpp"

namespace pgso::surrogate {

bool TrustRegion::contains(std::span<const double> psi) const {
  if (psi.size() != center.size()) {
    throw DimensionError("trust region has dimension " + std::to_string(center.size()) +
                         ", point has " + std::to_string(psi.size()));
  }
  for (std::size_t d = 0; d < psi.size(); ++d) {
    if (std::abs(psi[d] - center[d]) > epsilon) return false;
  }
  return true;
}

Tensor lhs_sample_psi(const TrustRegion& region, std::size_t M, Rng& rng) {
  if (M == 0) throw ConfigError("Latin hypercube needs at least one point");
  if (!(region.epsilon > 0.0)) throw ConfigError("trust region needs epsilon > 0");
  const std::size_t d = region.dim();
  const double width = 2.0 * region.epsilon / static_cast<double>(M);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::size_t> strata(M);
  Tensor points = Tensor::matrix(M, d);
  for (std::size_t j = 0; j < d; ++j) {
    std::iota(strata.begin(), strata.end(), std::size_t{0});
    std::shuffle(strata.begin(), strata.end(), rng);
    const double lo = region.center[j] - region.epsilon;
    for (std::size_t i = 0; i < M; ++i) {
      const double v = lo + width * (static_cast<double>(strata[i]) + unit(rng));
      points.at(i, j) = std::clamp(v, lo, region.center[j] + region.epsilon);
    }
  }
  return points;
}

}  // namespace pgso::surrogate
