#include "pgso/baselines/baselines.hpp"

#include "pgso/errors.hpp"
#include "pgso/rl/trainer.hpp"
#include "pgso/surrogate/history.hpp"

namespace pgso::baselines {

std::string to_string(Method m) {
  switch (m) {
    case Method::lgso: return "L-GSO";
    case Method::lgso_ensemble: return "L-GSO-E";
    case Method::numdiff: return "NumDiff";
  }
  return "";
}

Method method_from_string(const std::string& s) {
  if (s == "L-GSO" || s == "lgso") return Method::lgso;
  if (s == "L-GSO-E" || s == "lgso_e" || s == "lgso_ensemble") return Method::lgso_ensemble;
  if (s == "NumDiff" || s == "numdiff") return Method::numdiff;
  throw ConfigError("unknown baseline: " + s);
}

std::vector<double> central_difference_gradient(
    const std::function<double(std::span<const double>)>& f, std::span<const double> psi,
    double h) {
  if (!(h > 0.0)) throw ConfigError("finite difference step must be positive");
  std::vector<double> g(psi.size());
  std::vector<double> p(psi.begin(), psi.end());
  for (std::size_t d = 0; d < psi.size(); ++d) {
    p[d] = psi[d] + h;
    const double up = f(p);
    p[d] = psi[d] - h;
    const double down = f(p);
    p[d] = psi[d];
    g[d] = (up - down) / (2.0 * h);
  }
  return g;
}

NumdiffEngine::NumdiffEngine(const sim::Problem& problem, const sim::XDistribution& xdist,
                             double fd_step, std::uint64_t seed)
    : problem_(problem),
      xdist_(xdist),
      fd_step_(fd_step),
      rng_(make_rng(seed, {tag(Stream::acquisition)})),
      last_gradient_(problem.psi_dim, 0.0) {}

void NumdiffEngine::call(std::span<const double> psi, double) {
  const auto objective = sim::Objective(problem_.objective);
  auto mc_mean = [&](std::span<const double> p) {
    const nn::Tensor xs = xdist_.sample(problem_.N, rng_);
    const nn::Tensor ys = problem_.simulate(p, xs, rng_);
    return objective.mean(ys, xs);
  };
  last_gradient_ = central_difference_gradient(mc_mean, psi, fd_step_);
}

std::vector<double> NumdiffEngine::gradient(std::span<const double>) { return last_gradient_; }

std::uint64_t NumdiffEngine::evaluations_per_call() const {
  return 2ULL * problem_.psi_dim * problem_.N;
}

rl::EpisodeRecord run_baseline(const sim::Problem& problem, Method method,
                               const BaselineConfig& config, std::int64_t episode_index,
                               std::uint64_t seed) {
  const auto xdist = rl::episode_xdist(problem, seed);
  rl::EpisodeRecord rec;
  if (method == Method::numdiff) {
    NumdiffEngine engine(problem, xdist, config.fd_step, seed);
    rec = rl::run_episode_loop(problem, xdist, engine, rl::always_call, {}, config.episode,
                               seed);
  } else {
    auto episode = config.episode;
    std::size_t members = 1;
    if (method == Method::lgso_ensemble) {
      members = config.ensemble_size;
      episode.gradient_mode = surrogate::GradientMode::mean_of_grads;
    }
    auto seeds = rl::member_seeds(seed, members);
    if (config.identical_members) seeds.assign(members, seeds.front());
    surrogate::SurrogateEnsemble ensemble(problem.psi_dim, problem.x_dim, problem.y_dim,
                                          config.surrogate, seeds);
    surrogate::HistoryBuffer buffer(problem.psi_dim, problem.x_dim, problem.y_dim);
    rl::SurrogateEngine engine(problem, xdist, ensemble, buffer, /*warm_start=*/false,
                               /*compute_sigma=*/false, episode_index, seed, episode);
    rec = rl::run_episode_loop(problem, xdist, engine, rl::always_call, {}, episode, seed);
  }
  rec.method = to_string(method);
  rec.episode_index = episode_index;
  return rec;
}

std::vector<rl::EpisodeRecord> run_baseline_episodes(const sim::Problem& problem, Method method,
                                                     const BaselineConfig& config,
                                                     std::size_t episodes, std::uint64_t seed) {
  std::vector<rl::EpisodeRecord> out;
  for (std::size_t e = 0; e < episodes; ++e) {
    out.push_back(run_baseline(problem, method, config, static_cast<std::int64_t>(e),
                               derive_seed(seed, {tag(Stream::evaluation), e})));
  }
  return out;
}

}  // namespace pgso::baselines
