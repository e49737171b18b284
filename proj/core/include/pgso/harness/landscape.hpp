#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "pgso/sim/problem.hpp"

namespace pgso::harness {

/// Inclusive evenly spaced grid over (psi1, psi2).
struct GridSpec {
  double lo1 = -3.0;
  double hi1 = 3.0;
  std::size_t n1 = 61;
  double lo2 = -3.0;
  double hi2 = 3.0;
  std::size_t n2 = 61;
};

struct LandscapePoint {
  double psi1 = 0.0;
  double psi2 = 0.0;
  double mean = 0.0;
  double std_error = 0.0;
};

/// Monte-Carlo objective with `samples` draws at each grid node; only for
/// two-dimensional psi.
std::vector<LandscapePoint> export_landscape(const sim::Problem& problem,
                                             const sim::XDistribution& xdist,
                                             const GridSpec& grid, std::size_t samples,
                                             std::uint64_t seed);

void write_landscape_csv(const std::filesystem::path& path,
                         const std::vector<LandscapePoint>& points);

}  // namespace pgso::harness
