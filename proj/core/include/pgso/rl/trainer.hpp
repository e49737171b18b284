#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "pgso/policy/actor_critic.hpp"
#include "pgso/rl/episode.hpp"
#include "pgso/rl/ppo.hpp"
#include "pgso/sim/problem.hpp"
#include "pgso/surrogate/ensemble.hpp"
#include "pgso/surrogate/history.hpp"

namespace pgso::rl {

struct TrainingConfig {
  PPOConfig ppo;
  EpisodeConfig episode;
  surrogate::SurrogateConfig surrogate;
  policy::PolicyConfig policy;
  std::size_t iterations = 30;
  std::size_t ensemble_size = 3;
  std::uint64_t seed = 0;
};

/// The x distribution of an episode: canonical bounds, or freshly drawn
/// bounds in parameterized mode.
sim::XDistribution episode_xdist(const sim::Problem& problem, std::uint64_t episode_seed);

/// Runs policy-controlled episodes for one policy variant. The global
/// variant keeps one ensemble and history across all episodes it runs.
class PolicyRunner {
 public:
  PolicyRunner(const sim::Problem& problem, policy::PolicyVariant variant,
               const TrainingConfig& config);

  EpisodeRecord run(const policy::ActorCritic& ac, std::int64_t episode_index,
                    std::uint64_t episode_seed, bool deterministic);

  const surrogate::HistoryBuffer* global_history() const { return global_buffer_.get(); }

 private:
  const sim::Problem& problem_;
  policy::PolicyVariant variant_;
  TrainingConfig config_;
  std::unique_ptr<surrogate::SurrogateEnsemble> global_ensemble_;
  std::unique_ptr<surrogate::HistoryBuffer> global_buffer_;
};

/// Flattens episodes into a PPO batch: GAE advantages per episode with a
/// zero bootstrap at the end, optionally normalized over the batch.
PpoBatch make_batch(const policy::ActorCritic& ac, std::span<const EpisodeRecord> episodes,
                    const PPOConfig& config);

struct IterationLog {
  std::size_t iteration = 0;
  double mean_calls = 0.0;
  std::int64_t min_calls = 0;
  std::int64_t max_calls = 0;
  double mean_return = 0.0;
  double mean_steps = 0.0;
  double terminated_fraction = 0.0;
  double mean_call_probability = 0.0;
  double critic_mse = 0.0;
  std::size_t actor_updates = 0;
  std::size_t critic_updates = 0;
  double final_kl_b = 0.0;
  double final_kl_eps = 0.0;
};

nlohmann::json to_json(const IterationLog& log);

/// Summary statistics of a set of episodes, without update information.
IterationLog summarize(std::size_t iteration, std::span<const EpisodeRecord> episodes);

using IterationCallback =
    std::function<void(const IterationLog&, const std::vector<EpisodeRecord>&)>;

struct TrainingResult {
  policy::ActorCritic policy;
  std::vector<IterationLog> log;
};

/// PPO training: each iteration collects episodes_per_iteration rollouts
/// with the current policy, then updates the actor and the critic.
TrainingResult train_policy(const sim::Problem& problem, policy::PolicyVariant variant,
                            const TrainingConfig& config,
                            const IterationCallback& on_iteration = {});

/// Runs a fixed number of episodes with a fixed policy.
std::vector<EpisodeRecord> evaluate_policy(const sim::Problem& problem,
                                           const policy::ActorCritic& ac,
                                           const TrainingConfig& config,
                                           std::size_t episodes, std::uint64_t seed);

}  // namespace pgso::rl
