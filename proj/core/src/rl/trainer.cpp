#include "pgso/rl/trainer.hpp"

#include <algorithm>
#include <numeric>

#include "pgso/errors.hpp"
#include "pgso/sim/benchmarks.hpp"

namespace pgso::rl {

using json = nlohmann::json;

sim::XDistribution episode_xdist(const sim::Problem& problem, std::uint64_t episode_seed) {
  if (problem.x_mode == sim::XMode::fixed) return problem.x_canonical;
  Rng rng = make_rng(episode_seed, {tag(Stream::xdist)});
  return sim::sample_parameterized_bounds(problem, rng);
}

namespace {

bool is_global(policy::PolicyVariant v) { return v == policy::PolicyVariant::pi_al_g_e; }

}  // namespace

PolicyRunner::PolicyRunner(const sim::Problem& problem, policy::PolicyVariant variant,
                           const TrainingConfig& config)
    : problem_(problem), variant_(variant), config_(config) {
  if (config.ensemble_size == 0) throw ConfigError("ensemble_size must be positive");
  if (is_global(variant)) {
    global_ensemble_ = std::make_unique<surrogate::SurrogateEnsemble>(
        problem.psi_dim, problem.x_dim, problem.y_dim, config.surrogate,
        member_seeds(derive_seed(config.seed, {tag(Stream::members)}), config.ensemble_size));
    global_buffer_ = std::make_unique<surrogate::HistoryBuffer>(problem.psi_dim, problem.x_dim,
                                                                problem.y_dim);
  }
}

EpisodeRecord PolicyRunner::run(const policy::ActorCritic& ac, std::int64_t episode_index,
                                std::uint64_t episode_seed, bool deterministic) {
  const auto xdist = episode_xdist(problem_, episode_seed);
  std::optional<surrogate::SurrogateEnsemble> local_ensemble;
  std::optional<surrogate::HistoryBuffer> local_buffer;
  surrogate::SurrogateEnsemble* ensemble = global_ensemble_.get();
  surrogate::HistoryBuffer* buffer = global_buffer_.get();
  if (!is_global(variant_)) {
    local_ensemble.emplace(problem_.psi_dim, problem_.x_dim, problem_.y_dim, config_.surrogate,
                           member_seeds(episode_seed, config_.ensemble_size));
    local_buffer.emplace(problem_.psi_dim, problem_.x_dim, problem_.y_dim);
    ensemble = &*local_ensemble;
    buffer = &*local_buffer;
  }
  SurrogateEngine engine(problem_, xdist, *ensemble, *buffer, is_global(variant_),
                         /*compute_sigma=*/true, episode_index, episode_seed, config_.episode);
  auto rec = run_episode_loop(problem_, xdist, engine, policy_controller(ac, deterministic),
                              critic_value(ac), config_.episode, episode_seed);
  rec.method = policy::to_string(variant_);
  rec.episode_index = episode_index;
  return rec;
}

PpoBatch make_batch(const policy::ActorCritic& ac, std::span<const EpisodeRecord> episodes,
                    const PPOConfig& config) {
  std::size_t n = 0;
  for (const auto& e : episodes) n += e.transitions.size();
  PpoBatch b;
  b.features = nn::Tensor::matrix(n, ac.feature_dim());
  std::size_t row = 0;
  for (const auto& e : episodes) {
    std::vector<double> rewards, values;
    for (const auto& t : e.transitions) {
      rewards.push_back(t.reward);
      values.push_back(t.value);
    }
    const auto gae = compute_gae(rewards, values, 0.0, config.discount, config.gae_lambda);
    for (std::size_t k = 0; k < e.transitions.size(); ++k, ++row) {
      const auto& t = e.transitions[k];
      const auto f = ac.features(t.state);
      std::copy(f.begin(), f.end(), b.features.values().begin() + row * ac.feature_dim());
      b.call.push_back(t.action.call ? 1 : 0);
      b.log_prob_b.push_back(t.action.log_prob_b);
      const bool active = t.action.call && t.action.epsilon.has_value();
      b.eps_active.push_back(active ? 1 : 0);
      b.epsilon_raw.push_back(t.action.epsilon ? t.action.epsilon_raw : 1.0);
      b.log_prob_eps.push_back(t.action.log_prob_eps.value_or(0.0));
      b.advantages.push_back(gae.advantages[k]);
      b.returns.push_back(gae.returns[k]);
    }
  }
  if (config.normalize_advantages && n > 1) normalize(b.advantages);
  return b;
}

json to_json(const IterationLog& l) {
  return {{"iteration", l.iteration},
          {"mean_calls", l.mean_calls},
          {"min_calls", l.min_calls},
          {"max_calls", l.max_calls},
          {"mean_return", l.mean_return},
          {"mean_steps", l.mean_steps},
          {"terminated_fraction", l.terminated_fraction},
          {"mean_call_probability", l.mean_call_probability},
          {"critic_mse", l.critic_mse},
          {"actor_updates", l.actor_updates},
          {"critic_updates", l.critic_updates},
          {"final_kl_b", l.final_kl_b},
          {"final_kl_eps", l.final_kl_eps}};
}

IterationLog summarize(std::size_t iteration, std::span<const EpisodeRecord> episodes) {
  IterationLog log;
  log.iteration = iteration;
  if (episodes.empty()) return log;
  const double n = static_cast<double>(episodes.size());
  log.min_calls = episodes.front().total_calls;
  log.max_calls = episodes.front().total_calls;
  for (const auto& e : episodes) {
    log.mean_calls += static_cast<double>(e.total_calls) / n;
    log.min_calls = std::min(log.min_calls, e.total_calls);
    log.max_calls = std::max(log.max_calls, e.total_calls);
    log.mean_return += e.episode_return / n;
    log.mean_steps += static_cast<double>(e.steps) / n;
    log.mean_call_probability += e.mean_call_probability / n;
    if (e.outcome == DoneKind::terminated) log.terminated_fraction += 1.0 / n;
  }
  return log;
}

TrainingResult train_policy(const sim::Problem& problem, policy::PolicyVariant variant,
                            const TrainingConfig& config, const IterationCallback& on_iteration) {
  TrainingResult result{policy::ActorCritic(variant, problem.psi_dim, config.policy,
                                            derive_seed(config.seed, {tag(Stream::init)})),
                        {}};
  auto& ac = result.policy;
  PolicyRunner runner(problem, variant, config);
  nn::AdamState actor_adam;
  nn::AdamState critic_adam;
  const std::size_t per_iter = config.ppo.episodes_per_iteration;
  for (std::size_t it = 0; it < config.iterations; ++it) {
    std::vector<EpisodeRecord> episodes;
    for (std::size_t e = 0; e < per_iter; ++e) {
      const auto index = static_cast<std::int64_t>(it * per_iter + e);
      const auto seed = derive_seed(config.seed, {tag(Stream::rollout), it, e});
      episodes.push_back(runner.run(ac, index, seed, config.episode.deterministic_actions));
    }
    IterationLog log = summarize(it, episodes);
    const auto batch = make_batch(ac, episodes, config.ppo);
    if (batch.size() > 0) {
      const auto actor = ppo_actor_update(ac, batch, config.ppo, actor_adam);
      const auto critic = critic_update(ac, batch, config.ppo, critic_adam);
      log.actor_updates = actor.updates;
      log.critic_updates = critic.updates;
      if (!actor.kl_b.empty()) log.final_kl_b = actor.kl_b.back();
      if (!actor.kl_eps.empty()) log.final_kl_eps = actor.kl_eps.back();
      if (!critic.mse.empty()) log.critic_mse = critic.mse.back();
    }
    result.log.push_back(log);
    if (on_iteration) on_iteration(log, episodes);
  }
  return result;
}

std::vector<EpisodeRecord> evaluate_policy(const sim::Problem& problem,
                                           const policy::ActorCritic& ac,
                                           const TrainingConfig& config,
                                           std::size_t episodes, std::uint64_t seed) {
  TrainingConfig cfg = config;
  cfg.seed = seed;
  PolicyRunner runner(problem, ac.variant(), cfg);
  std::vector<EpisodeRecord> out;
  for (std::size_t e = 0; e < episodes; ++e) {
    const auto episode_seed = derive_seed(seed, {tag(Stream::evaluation), e});
    out.push_back(runner.run(ac, static_cast<std::int64_t>(e), episode_seed,
                             cfg.episode.deterministic_actions));
  }
  return out;
}

}  // namespace pgso::rl
