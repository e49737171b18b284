#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pgso/policy/actor_critic.hpp"
#include "pgso/rl/reward.hpp"
#include "pgso/sim/problem.hpp"
#include "pgso/surrogate/ensemble.hpp"
#include "pgso/surrogate/history.hpp"

namespace pgso::rl {

struct EpisodeConfig {
  std::int64_t T = 1000;
  std::int64_t L = 50;
  /// Adam learning rate on psi.
  double psi_lr = 0.1;
  /// D, the draws behind the uncertainty feature.
  std::size_t sigma_samples = 512;
  /// N_grad, the draws behind one surrogate gradient.
  std::size_t grad_samples = 512;
  /// Samples of the per-step termination oracle.
  std::size_t oracle_samples = 10000;
  surrogate::GradientMode gradient_mode = surrogate::GradientMode::mean_of_grads;
  /// Take b = (p >= 0.5) and eps = exp(mu) instead of sampling.
  bool deterministic_actions = false;
  bool record_transitions = true;
  /// Warm-start replay keeps calls at most this many steps old.
  std::int64_t warm_start_window = 12;

  bool operator==(const EpisodeConfig&) const = default;
};

/// Default psi learning rate per problem class.
double default_psi_lr(sim::ProblemKind kind);

struct Transition {
  policy::PolicyState state;
  policy::Action action;
  double reward = 0.0;
  double value = 0.0;
  /// Oracle objective after this step's psi update.
  double objective = 0.0;
  std::optional<DoneKind> done;
};

struct EpisodeRecord {
  std::string method;
  std::uint64_t seed = 0;
  std::int64_t episode_index = 0;
  std::vector<Transition> transitions;
  /// One entry per simulator call: the lowest oracle objective seen from
  /// that call up to the next one.
  std::vector<double> objective_trace;
  /// Timestep at which each call was made.
  std::vector<std::int64_t> call_steps;
  DoneKind outcome = DoneKind::failed;
  std::int64_t total_calls = 0;
  std::int64_t steps = 0;
  double episode_return = 0.0;
  std::uint64_t function_evaluations = 0;
  sim::XDistribution xdist;
  std::vector<double> final_psi;
  double final_objective = 0.0;
  double mean_call_probability = 0.0;
  std::string diagnostic;
};

nlohmann::json to_json(const EpisodeRecord& record);
EpisodeRecord episode_from_json(const nlohmann::json& j);

/// What a method does at one step once the call decision is made.
class StepEngine {
 public:
  virtual ~StepEngine() = default;
  virtual double sigma(std::span<const double> psi) = 0;
  /// One simulator call around psi with trust-region size epsilon.
  virtual void call(std::span<const double> psi, double epsilon) = 0;
  virtual std::vector<double> gradient(std::span<const double> psi) = 0;
  virtual std::uint64_t evaluations_per_call() const = 0;
};

using Controller = std::function<policy::Action(const policy::PolicyState&, Rng&)>;
using ValueFunction = std::function<double(const policy::PolicyState&)>;

/// Controller that calls the simulator at every step.
policy::Action always_call(const policy::PolicyState& state, Rng& rng);

/// Shared episode loop: sigma, action, optional call, gradient, Adam step on
/// psi, oracle termination check, reward bookkeeping.
EpisodeRecord run_episode_loop(const sim::Problem& problem, const sim::XDistribution& xdist,
                               StepEngine& engine, const Controller& controller,
                               const ValueFunction& value, const EpisodeConfig& config,
                               std::uint64_t seed);

/// Surrogate-driven steps. Cold start retrains from scratch on the
/// in-region history; warm start continues training on geometric replay.
class SurrogateEngine : public StepEngine {
 public:
  SurrogateEngine(const sim::Problem& problem, const sim::XDistribution& xdist,
                  surrogate::SurrogateEnsemble& ensemble, surrogate::HistoryBuffer& buffer,
                  bool warm_start, bool compute_sigma, std::int64_t episode_index,
                  std::uint64_t seed, const EpisodeConfig& config);

  double sigma(std::span<const double> psi) override;
  void call(std::span<const double> psi, double epsilon) override;
  std::vector<double> gradient(std::span<const double> psi) override;
  std::uint64_t evaluations_per_call() const override;

 private:
  const sim::Problem& problem_;
  sim::XDistribution xdist_;
  surrogate::SurrogateEnsemble& ensemble_;
  surrogate::HistoryBuffer& buffer_;
  bool warm_start_;
  bool compute_sigma_;
  std::int64_t episode_index_;
  EpisodeConfig config_;
  sim::Objective objective_;
  Rng acquisition_rng_;
  Rng training_rng_;
  Rng gradient_rng_;
  Rng sigma_rng_;
};

/// Policy controller: samples (or takes the mode of) the actor's action.
Controller policy_controller(const policy::ActorCritic& ac, bool deterministic);
ValueFunction critic_value(const policy::ActorCritic& ac);

/// Member seeds of the ensemble used in an episode with the given seed.
std::vector<std::uint64_t> member_seeds(std::uint64_t seed, std::size_t members);

}  // namespace pgso::rl
