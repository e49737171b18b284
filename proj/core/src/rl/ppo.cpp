#include "pgso/rl/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "pgso/errors.hpp"

namespace pgso::rl {

using nn::Tape;
using nn::Tensor;
using nn::Var;

void normalize(std::vector<double>& v) {
  if (v.empty()) return;
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double var = 0;
  for (double x : v) var += (x - mean) * (x - mean);
  const double sd = std::sqrt(var / n);
  for (double& x : v) x = (x - mean) / (sd + 1e-8);
}

double clipped_surrogate(double ratio, double advantage, double clip) {
  const double clipped = std::clamp(ratio, 1.0 - clip, 1.0 + clip);
  return std::min(ratio * advantage, clipped * advantage);
}

Var clipped_surrogate(Var ratio, std::span<const double> advantages, double clip) {
  const Tensor& r = ratio.value();
  if (r.size() != advantages.size()) {
    throw DimensionError("clipped surrogate: ratio and advantage counts differ");
  }
  Tensor out = Tensor::matrix(r.size(), 1);
  std::vector<double> slope(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double a = advantages[i];
    const double unclipped = r[i] * a;
    const double clipped = std::clamp(r[i], 1.0 - clip, 1.0 + clip) * a;
    out[i] = std::min(unclipped, clipped);
    slope[i] = unclipped <= clipped ? a : 0.0;
  }
  Tape* tape = ratio.tape();
  return tape->record(std::move(out), [ratio, slope = std::move(slope)](const Tensor& g,
                                                                       Tape& t) {
    std::vector<double> d(slope.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = g[i] * slope[i];
    t.accumulate(ratio, d);
  });
}

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;

Tensor column_tensor(std::span<const double> v) {
  return Tensor::matrix(v.size(), 1, std::vector<double>(v.begin(), v.end()));
}

}  // namespace

HeadLogProbs batch_log_probs(const policy::ActorCritic& ac, const PpoBatch& batch) {
  const Tensor out = ac.actor().forward(batch.features);
  const std::size_t n = batch.size();
  HeadLogProbs lp{std::vector<double>(n), std::vector<double>(n, 0.0)};
  for (std::size_t i = 0; i < n; ++i) {
    const auto d = ac.distributions_from_output(out.row(i));
    lp.log_prob_b[i] = policy::bernoulli_log_prob(d.call_logit, batch.call[i] != 0);
    if (d.has_epsilon && batch.eps_active[i]) {
      lp.log_prob_eps[i] = policy::lognormal_log_pdf(batch.epsilon_raw[i], d.mu, d.s);
    }
  }
  return lp;
}

Var ppo_objective(const policy::ActorCritic& ac, const nn::BoundMlp& actor, Tape& tape,
                  const PpoBatch& batch, double clip) {
  const std::size_t n = batch.size();
  if (n == 0) throw ConfigError("PPO batch is empty");
  Var feats = tape.variable(batch.features);
  policy::TracedHeads h = ac.heads(actor, feats);

  std::vector<double> sign(n), old_b(batch.log_prob_b);
  for (std::size_t i = 0; i < n; ++i) sign[i] = batch.call[i] ? -1.0 : 1.0;
  Var new_b = -nn::softplus(h.logit * tape.variable(column_tensor(sign)));
  Var ratio_b = nn::exp(new_b - tape.variable(column_tensor(old_b)));
  Var objective = nn::mean(clipped_surrogate(ratio_b, batch.advantages, clip));

  const bool any_eps =
      policy::has_epsilon_head(ac.variant()) &&
      std::any_of(batch.eps_active.begin(), batch.eps_active.end(), [](char c) { return c; });
  if (any_eps) {
    std::vector<double> log_v(n), mask(n), adv(n);
    for (std::size_t i = 0; i < n; ++i) {
      log_v[i] = std::log(batch.epsilon_raw[i]);
      mask[i] = batch.eps_active[i] ? 1.0 : 0.0;
    }
    Var lv = tape.variable(column_tensor(log_v));
    Var dev = lv - h.mu;
    Var new_eps = -nn::log(h.s) - nn::square(dev) / (2.0 * nn::square(h.s)) - lv -
                  kHalfLog2Pi;
    Var ratio_eps = nn::exp(new_eps - tape.variable(column_tensor(batch.log_prob_eps)));
    Var per = clipped_surrogate(ratio_eps, batch.advantages, clip);
    Var masked = per * tape.variable(column_tensor(mask));
    objective = objective + nn::sum(masked) * (1.0 / static_cast<double>(n));
  }
  if (!std::isfinite(objective.value().item())) {
    throw DivergenceError("non-finite PPO objective (probability ratio overflow)");
  }
  return objective;
}

ActorUpdateResult ppo_actor_update(policy::ActorCritic& ac, const PpoBatch& batch,
                                   const PPOConfig& config, nn::AdamState& adam) {
  ActorUpdateResult result;
  const std::size_t n = batch.size();
  if (n == 0) return result;
  std::size_t eps_rows = 0;
  for (char c : batch.eps_active) eps_rows += c ? 1 : 0;
  while (result.updates < config.max_actor_updates) {
    {
      Tape tape;
      nn::BoundMlp bound(tape, ac.actor());
      Var objective = ppo_objective(ac, bound, tape, batch, config.clip);
      Var loss = -objective;
      auto grads = tape.backward(loss, bound.parameters());
      auto params = ac.actor().parameters();
      nn::adam_step(params, grads, adam, config.actor_lr);
    }
    ++result.updates;
    const HeadLogProbs lp = batch_log_probs(ac, batch);
    double kl_b = 0, kl_eps = 0;
    for (std::size_t i = 0; i < n; ++i) {
      kl_b += batch.log_prob_b[i] - lp.log_prob_b[i];
      if (batch.eps_active[i]) kl_eps += batch.log_prob_eps[i] - lp.log_prob_eps[i];
    }
    // KL is non-negative; a negative sample estimate means no measurable drift.
    kl_b = std::max(0.0, kl_b / static_cast<double>(n));
    kl_eps = eps_rows ? std::max(0.0, kl_eps / static_cast<double>(eps_rows)) : 0.0;
    if (!std::isfinite(kl_b) || !std::isfinite(kl_eps)) {
      throw DivergenceError("non-finite KL estimate after actor update");
    }
    result.kl_b.push_back(kl_b);
    result.kl_eps.push_back(kl_eps);
    if (kl_b >= config.kl_threshold_b) break;
    if (eps_rows && kl_eps >= config.kl_threshold_eps) break;
  }
  return result;
}

namespace {

double critic_mse(const policy::ActorCritic& ac, const PpoBatch& batch) {
  const Tensor out = ac.critic().forward(batch.features);
  const double T = static_cast<double>(ac.config().T);
  double total = 0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const double d = out[i] * T - batch.returns[i];
    total += d * d;
  }
  return total / static_cast<double>(batch.size());
}

}  // namespace

CriticUpdateResult critic_update(policy::ActorCritic& ac, const PpoBatch& batch,
                                 const PPOConfig& config, nn::AdamState& adam) {
  CriticUpdateResult result;
  if (batch.size() == 0) return result;
  const double T = static_cast<double>(ac.config().T);
  for (;;) {
    const double mse = critic_mse(ac, batch);
    if (!std::isfinite(mse)) throw DivergenceError("non-finite critic loss");
    result.mse.push_back(mse);
    if (mse <= config.critic_mse_target || result.updates >= config.max_critic_updates) break;
    Tape tape;
    nn::BoundMlp bound(tape, ac.critic());
    Var v = bound.forward(tape.variable(batch.features)) * T;
    Var loss = nn::mean(nn::square(v - tape.variable(column_tensor(batch.returns))));
    auto grads = tape.backward(loss, bound.parameters());
    auto params = ac.critic().parameters();
    nn::adam_step(params, grads, adam, config.critic_lr);
    ++result.updates;
  }
  return result;
}

}  // namespace pgso::rl
