#include "pgso/policy/actor_critic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "pgso/errors.hpp"
#include "pgso/nn/checkpoint.hpp"

namespace pgso::policy {

std::string to_string(PolicyVariant v) {
  switch (v) {
    case PolicyVariant::pi_e:
      return "pi_E";
    case PolicyVariant::pi_al_e:
      return "pi_AL_E";
    case PolicyVariant::pi_al_g_e:
      return "pi_AL_G_E";
  }
  return "unknown";
}

PolicyVariant policy_variant_from_string(const std::string& s) {
  if (s == "pi_E") return PolicyVariant::pi_e;
  if (s == "pi_AL_E") return PolicyVariant::pi_al_e;
  if (s == "pi_AL_G_E") return PolicyVariant::pi_al_g_e;
  throw ConfigError("unknown policy variant '" + s + "'");
}

double bernoulli_log_prob(double logit, bool b) {
  return b ? -nn::softplus(-logit) : -nn::softplus(logit);
}

double lognormal_log_pdf(double v, double mu, double s) {
  const double lv = std::log(v);
  const double d = lv - mu;
  return -lv - std::log(s) - 0.5 * std::log(2.0 * std::numbers::pi) - d * d / (2.0 * s * s);
}

namespace {

nn::Mlp make_head(std::size_t in, std::size_t hidden, std::size_t out, std::uint64_t seed,
                  double output_scale) {
  nn::Mlp net = nn::Mlp::glorot({in, hidden, out}, seed);
  for (double& w : net.layers().back().weight.values()) w *= output_scale;
  return net;
}

}  // namespace

ActorCritic::ActorCritic(PolicyVariant variant, std::size_t psi_dim, PolicyConfig config,
                         std::uint64_t seed)
    : variant_(variant), psi_dim_(psi_dim), config_(config) {
  if (psi_dim_ == 0) throw ConfigError("policy needs psi_dim >= 1");
  if (config_.T < 1 || config_.L < 1) throw ConfigError("policy needs T, L >= 1");
  if (!(config_.epsilon_min > 0.0 && config_.epsilon_min < config_.epsilon_max)) {
    throw ConfigError("policy epsilon clamp interval is empty");
  }
  if (!(config_.epsilon_default > 0.0)) throw ConfigError("epsilon_default must be positive");
  const std::size_t out = has_epsilon_head(variant_) ? 3 : 1;
  actor_ = make_head(feature_dim(), config_.hidden, out, derive_seed(seed, {1}),
                     config_.output_init_scale);
  critic_ = make_head(feature_dim(), config_.hidden, 1, derive_seed(seed, {2}),
                      config_.output_init_scale);
}

std::vector<double> ActorCritic::features(const PolicyState& state) const {
  if (state.psi.size() != psi_dim_) {
    throw DimensionError("policy state has " + std::to_string(state.psi.size()) +
                         " psi entries, expected " + std::to_string(psi_dim_));
  }
  std::vector<double> f(state.psi);
  f.push_back(static_cast<double>(state.t) / static_cast<double>(config_.T));
  f.push_back(static_cast<double>(state.l) / static_cast<double>(config_.L));
  f.push_back(state.sigma);
  for (double v : f) {
    if (!std::isfinite(v)) throw DivergenceError("non-finite policy state feature");
  }
  return f;
}

ActionDistribution ActorCritic::distributions_from_output(std::span<const double> out) const {
  for (double v : out) {
    if (!std::isfinite(v)) throw DivergenceError("non-finite actor output");
  }
  ActionDistribution d;
  d.call_logit = out[0];
  d.call_probability = nn::sigmoid(out[0]);
  if (has_epsilon_head(variant_)) {
    d.has_epsilon = true;
    d.mu = out[1] + std::log(config_.epsilon_default);
    d.s = nn::softplus(out[2]);
  }
  return d;
}

ActionDistribution ActorCritic::distributions(const PolicyState& state) const {
  const auto f = features(state);
  nn::Tensor out = actor_.forward(nn::Tensor::vector(f));
  return distributions_from_output(out.values());
}

Action ActorCritic::sample(const PolicyState& state, Rng& rng, bool deterministic) const {
  const ActionDistribution d = distributions(state);
  Action a;
  a.call_probability = d.call_probability;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  // Draw both variates every step so the stream does not depend on b.
  const double u = unit(rng);
  const double zeta = normal(rng);
  a.call = deterministic ? d.call_probability >= 0.5 : u < d.call_probability;
  a.log_prob_b = bernoulli_log_prob(d.call_logit, a.call);
  if (d.has_epsilon) {
    a.epsilon_raw = std::exp(d.mu + (deterministic ? 0.0 : d.s * zeta));
    a.epsilon = std::clamp(a.epsilon_raw, config_.epsilon_min, config_.epsilon_max);
    a.log_prob_eps = lognormal_log_pdf(a.epsilon_raw, d.mu, d.s);
  }
  return a;
}

double ActorCritic::value(const PolicyState& state) const {
  const auto f = features(state);
  const double raw = critic_.forward(nn::Tensor::vector(f))[0];
  if (!std::isfinite(raw)) throw DivergenceError("non-finite critic output");
  return raw * static_cast<double>(config_.T);
}

TracedHeads ActorCritic::heads(const nn::BoundMlp& bound, nn::Var features) const {
  nn::Var out = bound.forward(features);
  TracedHeads h;
  h.logit = nn::column(out, 0);
  if (has_epsilon_head(variant_)) {
    h.mu = nn::column(out, 1) + std::log(config_.epsilon_default);
    h.s = nn::softplus(nn::column(out, 2));
  }
  return h;
}

nlohmann::json ActorCritic::to_json() const {
  nn::ParameterSet params;
  nn::append_mlp(params, "actor", actor_);
  nn::append_mlp(params, "critic", critic_);
  return {{"format", "pgso-policy"},
          {"version", 1},
          {"variant", to_string(variant_)},
          {"psi_dim", psi_dim_},
          {"hidden", config_.hidden},
          {"T", config_.T},
          {"L", config_.L},
          {"epsilon_default", config_.epsilon_default},
          {"epsilon_min", config_.epsilon_min},
          {"epsilon_max", config_.epsilon_max},
          {"output_init_scale", config_.output_init_scale},
          {"parameters", nn::to_json(params)}};
}

ActorCritic ActorCritic::from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "pgso-policy") throw ConfigError("not a policy checkpoint");
  PolicyConfig cfg;
  cfg.hidden = j.at("hidden").get<std::size_t>();
  cfg.T = j.at("T").get<std::int64_t>();
  cfg.L = j.at("L").get<std::int64_t>();
  cfg.epsilon_default = j.at("epsilon_default").get<double>();
  cfg.epsilon_min = j.at("epsilon_min").get<double>();
  cfg.epsilon_max = j.at("epsilon_max").get<double>();
  cfg.output_init_scale = j.at("output_init_scale").get<double>();
  ActorCritic ac(policy_variant_from_string(j.at("variant").get<std::string>()),
                 j.at("psi_dim").get<std::size_t>(), cfg, 0);
  const auto params = nn::parameter_set_from_json(j.at("parameters"));
  nn::load_mlp(params, "actor", ac.actor_);
  nn::load_mlp(params, "critic", ac.critic_);
  return ac;
}

void ActorCritic::save(const std::filesystem::path& path) const {
  nn::save_json(path, to_json());
}

ActorCritic ActorCritic::load(const std::filesystem::path& path) {
  return from_json(nn::load_json(path));
}

bool ActorCritic::operator==(const ActorCritic& other) const {
  return variant_ == other.variant_ && psi_dim_ == other.psi_dim_ &&
         config_ == other.config_ && actor_ == other.actor_ && critic_ == other.critic_;
}

}  // namespace pgso::policy
