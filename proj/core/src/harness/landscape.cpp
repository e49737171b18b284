#include "pgso/harness/landscape.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include "pgso/errors.hpp"
#include "pgso/sim/objective.hpp"

namespace pgso::harness {

namespace {

double node(double lo, double hi, std::size_t n, std::size_t i) {
  if (n == 1) return lo;
  return lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
}

}  // namespace

std::vector<LandscapePoint> export_landscape(const sim::Problem& problem,
                                             const sim::XDistribution& xdist,
                                             const GridSpec& grid, std::size_t samples,
                                             std::uint64_t seed) {
  if (problem.psi_dim != 2) throw DimensionError("landscape export needs a 2-dimensional psi");
  if (grid.n1 == 0 || grid.n2 == 0 || samples == 0) {
    throw ConfigError("landscape grid and sample count must be positive");
  }
  const sim::Objective objective(problem.objective);
  std::vector<LandscapePoint> out;
  for (std::size_t i = 0; i < grid.n1; ++i) {
    for (std::size_t j = 0; j < grid.n2; ++j) {
      LandscapePoint p{node(grid.lo1, grid.hi1, grid.n1, i), node(grid.lo2, grid.hi2, grid.n2, j)};
      std::vector<double> psi{p.psi1, p.psi2};
      // At psi = 0 the Three Hump output no longer depends on the mixture
      // component (h = 0), so evaluate the limit just off the origin.
      if (problem.kind == sim::ProblemKind::three_hump && p.psi1 == 0.0 && p.psi2 == 0.0) {
        psi[0] = std::numeric_limits<double>::denorm_min();
      }
      Rng rng = make_rng(seed, {i, j});
      const nn::Tensor xs = xdist.sample(samples, rng);
      const nn::Tensor ys = problem.simulate(psi, xs, rng);
      double sum = 0, sq = 0;
      for (std::size_t k = 0; k < samples; ++k) {
        const double l = objective.per_sample(ys.row(k), xs.row(k));
        sum += l;
        sq += l * l;
      }
      const double n = static_cast<double>(samples);
      p.mean = sum / n;
      const double var = samples > 1 ? std::max(0.0, (sq - n * p.mean * p.mean) / (n - 1)) : 0.0;
      p.std_error = std::sqrt(var / n);
      out.push_back(p);
    }
  }
  return out;
}

void write_landscape_csv(const std::filesystem::path& path,
                         const std::vector<LandscapePoint>& points) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out.precision(17);
  out << "psi1,psi2,mean,std_error\n";
  for (const auto& p : points) {
    out << p.psi1 << ',' << p.psi2 << ',' << p.mean << ',' << p.std_error << '\n';
  }
}

}  // namespace pgso::harness
