#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "pgso/nn/adam.hpp"
#include "pgso/nn/autodiff.hpp"
#include "pgso/nn/tensor.hpp"
#include "pgso/policy/actor_critic.hpp"

namespace pgso::rl {

struct PPOConfig {
  double clip = 0.2;
  double gae_lambda = 0.95;
  double discount = 1.0;
  double kl_threshold_b = 3e-3;
  double kl_threshold_eps = 1e-2;
  std::size_t max_actor_updates = 20;
  double actor_lr = 3e-4;
  double critic_lr = 1e-4;
  double critic_mse_target = 30.0;
  std::size_t max_critic_updates = 10;
  std::size_t episodes_per_iteration = 16;
  bool normalize_advantages = true;

  bool operator==(const PPOConfig&) const = default;
};

/// Flattened rollout data for one PPO update.
struct PpoBatch {
  nn::Tensor features;  // n x feature_dim
  std::vector<char> call;
  std::vector<double> log_prob_b;
  /// 1 where the epsilon head acted (b = 1 and the policy has the head).
  std::vector<char> eps_active;
  std::vector<double> epsilon_raw;
  std::vector<double> log_prob_eps;
  std::vector<double> advantages;
  std::vector<double> returns;

  std::size_t size() const { return call.size(); }
};

/// Subtracts the mean and divides by (std + 1e-8).
void normalize(std::vector<double>& v);

/// min(r A, clip(r, 1 - c, 1 + c) A).
double clipped_surrogate(double ratio, double advantage, double clip);
/// Elementwise traced version over an n x 1 ratio column; the gradient is A
/// where the unclipped branch is selected and 0 elsewhere.
nn::Var clipped_surrogate(nn::Var ratio, std::span<const double> advantages, double clip);

struct HeadLogProbs {
  std::vector<double> log_prob_b;
  std::vector<double> log_prob_eps;
};

/// Current-policy log-probabilities of the batch actions (eager).
HeadLogProbs batch_log_probs(const policy::ActorCritic& ac, const PpoBatch& batch);

/// Traced PPO-clip objective (to be maximized): mean over rows of the
/// decision-head term plus the epsilon-head term summed over active rows
/// and divided by n.
nn::Var ppo_objective(const policy::ActorCritic& ac, const nn::BoundMlp& actor,
                      nn::Tape& tape, const PpoBatch& batch, double clip);

struct ActorUpdateResult {
  std::size_t updates = 0;
  std::vector<double> kl_b;
  std::vector<double> kl_eps;
};

/// Repeated Adam steps on the clipped objective until either head's
/// empirical KL (mean old - new log-prob, floored at 0) reaches its threshold or
/// max_actor_updates steps are done.
ActorUpdateResult ppo_actor_update(policy::ActorCritic& ac, const PpoBatch& batch,
                                   const PPOConfig& config, nn::AdamState& adam);

struct CriticUpdateResult {
  std::size_t updates = 0;
  /// MSE before each update and after the last one.
  std::vector<double> mse;
};

/// Adam steps on mean (T * V_raw - R)^2 while MSE > target and fewer than
/// max_critic_updates steps were taken.
CriticUpdateResult critic_update(policy::ActorCritic& ac, const PpoBatch& batch,
                                 const PPOConfig& config, nn::AdamState& adam);

}  // namespace pgso::rl
