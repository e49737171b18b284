#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "pgso/rl/episode.hpp"
#include "pgso/sim/problem.hpp"
#include "pgso/surrogate/ensemble.hpp"

namespace pgso::baselines {

enum class Method { lgso, lgso_ensemble, numdiff };

std::string to_string(Method m);
Method method_from_string(const std::string& s);

struct BaselineConfig {
  rl::EpisodeConfig episode;
  surrogate::SurrogateConfig surrogate;
  /// Members of the L-GSO-E ensemble.
  std::size_t ensemble_size = 3;
  /// Half-width of the central difference stencil.
  double fd_step = 0.05;
  /// Give every L-GSO-E member the seed of the single L-GSO surrogate.
  bool identical_members = false;
};

/// Runs one episode of a fixed-schedule baseline. All three call the
/// simulator at every step; L-GSO variants use the problem's default
/// trust-region size and retrain from scratch on in-region history.
rl::EpisodeRecord run_baseline(const sim::Problem& problem, Method method,
                               const BaselineConfig& config, std::int64_t episode_index,
                               std::uint64_t seed);

std::vector<rl::EpisodeRecord> run_baseline_episodes(const sim::Problem& problem, Method method,
                                                     const BaselineConfig& config,
                                                     std::size_t episodes, std::uint64_t seed);

/// (f(psi + h e_d) - f(psi - h e_d)) / (2h) for every coordinate d.
std::vector<double> central_difference_gradient(
    const std::function<double(std::span<const double>)>& f, std::span<const double> psi,
    double h);

/// Steps driven by finite differences of Monte-Carlo simulator means. Each
/// call evaluates 2 * psi_dim * N simulator samples.
class NumdiffEngine : public rl::StepEngine {
 public:
  NumdiffEngine(const sim::Problem& problem, const sim::XDistribution& xdist, double fd_step,
                std::uint64_t seed);

  double sigma(std::span<const double>) override { return 0.0; }
  void call(std::span<const double> psi, double epsilon) override;
  std::vector<double> gradient(std::span<const double> psi) override;
  std::uint64_t evaluations_per_call() const override;

 private:
  const sim::Problem& problem_;
  sim::XDistribution xdist_;
  double fd_step_;
  Rng rng_;
  std::vector<double> last_gradient_;
};

}  // namespace pgso::baselines
