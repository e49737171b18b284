#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pgso/nn/autodiff.hpp"
#include "pgso/nn/mlp.hpp"
#include "pgso/sim/rng.hpp"

namespace pgso::policy {

/// pi_e decides when to call; pi_al_e also picks the trust-region size;
/// pi_al_g_e additionally keeps one warm-started surrogate across episodes.
enum class PolicyVariant { pi_e, pi_al_e, pi_al_g_e };

std::string to_string(PolicyVariant v);
PolicyVariant policy_variant_from_string(const std::string& s);
inline bool has_epsilon_head(PolicyVariant v) { return v != PolicyVariant::pi_e; }

/// MDP state (psi_t, t, l_t, sigma_t).
struct PolicyState {
  std::vector<double> psi;
  std::int64_t t = 1;
  std::int64_t l = 0;
  double sigma = 0.0;
};

struct PolicyConfig {
  std::size_t hidden = 256;
  std::int64_t T = 1000;
  std::int64_t L = 50;
  double epsilon_default = 0.5;
  double epsilon_min = 1e-3;
  double epsilon_max = 10.0;
  /// Output-layer weights are multiplied by this after Glorot init so the
  /// untrained actor starts near p = 0.5 and the critic near 0.
  double output_init_scale = 0.01;

  bool operator==(const PolicyConfig&) const = default;
};

struct ActionDistribution {
  double call_logit = 0.0;
  double call_probability = 0.5;
  bool has_epsilon = false;
  double mu = 0.0;
  double s = 1.0;
};

struct Action {
  bool call = false;
  /// Clamped trust-region size; absent for pi_e.
  std::optional<double> epsilon;
  /// Lognormal draw before clamping (what log_prob_eps is evaluated at).
  double epsilon_raw = 0.0;
  double log_prob_b = 0.0;
  std::optional<double> log_prob_eps;
  double call_probability = 0.5;
};

/// log P(b) for a Bernoulli with the given logit, computed stably.
double bernoulli_log_prob(double logit, bool b);
/// Log density of a lognormal with log-mean mu and log-std s at v > 0.
double lognormal_log_pdf(double v, double mu, double s);

/// Traced actor heads for a batch of feature rows.
struct TracedHeads {
  nn::Var logit;  // n x 1
  nn::Var mu;     // n x 1, absent for pi_e
  nn::Var s;      // n x 1, absent for pi_e
};

/// Separate actor and critic MLPs with one ReLU hidden layer.
class ActorCritic {
 public:
  ActorCritic(PolicyVariant variant, std::size_t psi_dim, PolicyConfig config,
              std::uint64_t seed);

  PolicyVariant variant() const { return variant_; }
  std::size_t psi_dim() const { return psi_dim_; }
  const PolicyConfig& config() const { return config_; }
  std::size_t feature_dim() const { return psi_dim_ + 3; }

  nn::Mlp& actor() { return actor_; }
  const nn::Mlp& actor() const { return actor_; }
  nn::Mlp& critic() { return critic_; }
  const nn::Mlp& critic() const { return critic_; }

  /// [psi, t / T, l / L, sigma].
  std::vector<double> features(const PolicyState& state) const;

  ActionDistribution distributions(const PolicyState& state) const;
  ActionDistribution distributions_from_output(std::span<const double> out) const;

  /// Samples b ~ Bernoulli(p) and, with an epsilon head,
  /// eps = clamp(exp(mu + s * zeta)). Deterministic mode takes b = (p >= 0.5)
  /// and eps = exp(mu).
  Action sample(const PolicyState& state, Rng& rng, bool deterministic = false) const;

  /// Raw critic output times T.
  double value(const PolicyState& state) const;

  /// Traced heads over a feature batch, with actor leaves bound on `bound`.
  TracedHeads heads(const nn::BoundMlp& bound, nn::Var features) const;

  nlohmann::json to_json() const;
  static ActorCritic from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static ActorCritic load(const std::filesystem::path& path);

  bool operator==(const ActorCritic& other) const;

 private:
  PolicyVariant variant_;
  std::size_t psi_dim_;
  PolicyConfig config_;
  nn::Mlp actor_;
  nn::Mlp critic_;
};

}  // namespace pgso::policy
