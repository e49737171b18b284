#include "pgso/rl/episode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pgso/errors.hpp"
#include "pgso/nn/adam.hpp"
#include "pgso/sim/benchmarks.hpp"

namespace pgso::rl {

using json = nlohmann::json;

double default_psi_lr(sim::ProblemKind kind) {
  return kind == sim::ProblemKind::rosenbrock ? 0.05 : 0.1;
}

policy::Action always_call(const policy::PolicyState&, Rng&) {
  policy::Action a;
  a.call = true;
  a.call_probability = 1.0;
  a.log_prob_b = 0.0;
  return a;
}

std::vector<std::uint64_t> member_seeds(std::uint64_t seed, std::size_t members) {
  std::vector<std::uint64_t> out;
  for (std::size_t m = 0; m < members; ++m) {
    out.push_back(derive_seed(seed, {tag(Stream::members), m}));
  }
  return out;
}

EpisodeRecord run_episode_loop(const sim::Problem& problem, const sim::XDistribution& xdist,
                               StepEngine& engine, const Controller& controller,
                               const ValueFunction& value, const EpisodeConfig& config,
                               std::uint64_t seed) {
  if (config.T < 1 || config.L < 1) throw ConfigError("episode needs T, L >= 1");
  EpisodeRecord rec;
  rec.seed = seed;
  rec.xdist = xdist;
  Rng policy_rng = make_rng(seed, {tag(Stream::policy)});
  Rng oracle_rng = make_rng(seed, {tag(Stream::oracle)});
  nn::Tensor psi = nn::Tensor::vector(problem.psi0);
  nn::AdamState psi_adam;
  std::int64_t l = 0;
  double probability_sum = 0.0;
  double last_objective = std::numeric_limits<double>::quiet_NaN();

  for (std::int64_t t = 1; t <= config.T; ++t) {
    Transition tr;
    std::optional<DoneKind> done;
    bool called = false;
    try {
      tr.state = {psi.to_vector(), t, l, engine.sigma(psi.values())};
      tr.action = controller(tr.state, policy_rng);
      tr.value = value ? value(tr.state) : 0.0;
      probability_sum += tr.action.call_probability;
      if (tr.action.call) {
        engine.call(psi.values(), tr.action.epsilon.value_or(problem.epsilon_default));
        called = true;
        ++l;
        rec.function_evaluations += engine.evaluations_per_call();
        rec.call_steps.push_back(t);
        rec.objective_trace.push_back(std::numeric_limits<double>::infinity());
      }
      const auto grad = engine.gradient(psi.values());
      nn::Tensor* params[] = {&psi};
      const nn::Tensor g = nn::Tensor::vector(grad);
      nn::adam_step(params, std::span<const nn::Tensor>(&g, 1), psi_adam, config.psi_lr);
      if (!psi.all_finite()) throw DivergenceError("psi became non-finite");
      tr.objective = sim::oracle_expected_loss(problem, psi.values(), xdist, oracle_rng,
                                               config.oracle_samples);
      last_objective = tr.objective;
      if (!rec.objective_trace.empty()) {
        rec.objective_trace.back() = std::min(rec.objective_trace.back(), tr.objective);
      }
      if (tr.objective <= problem.tau) {
        done = DoneKind::terminated;
      } else if (l >= config.L) {
        done = DoneKind::call_budget;
      } else if (t >= config.T) {
        done = DoneKind::timestep_budget;
      }
    } catch (const std::exception& e) {
      rec.diagnostic = e.what();
      done = DoneKind::failed;
      tr.objective = last_objective;
    }
    tr.done = done;
    tr.reward = reward(called, done, l, config.L);
    rec.episode_return += tr.reward;
    rec.steps = t;
    if (config.record_transitions) rec.transitions.push_back(std::move(tr));
    if (done) {
      rec.outcome = *done;
      break;
    }
  }
  rec.total_calls = l;
  rec.final_psi = psi.to_vector();
  rec.final_objective = last_objective;
  rec.mean_call_probability =
      rec.steps > 0 ? probability_sum / static_cast<double>(rec.steps) : 0.0;
  return rec;
}

SurrogateEngine::SurrogateEngine(const sim::Problem& problem, const sim::XDistribution& xdist,
                                 surrogate::SurrogateEnsemble& ensemble,
                                 surrogate::HistoryBuffer& buffer, bool warm_start,
                                 bool compute_sigma, std::int64_t episode_index,
                                 std::uint64_t seed, const EpisodeConfig& config)
    : problem_(problem),
      xdist_(xdist),
      ensemble_(ensemble),
      buffer_(buffer),
      warm_start_(warm_start),
      compute_sigma_(compute_sigma),
      episode_index_(episode_index),
      config_(config),
      objective_(problem.objective),
      acquisition_rng_(make_rng(seed, {tag(Stream::acquisition)})),
      training_rng_(make_rng(seed, {tag(Stream::training)})),
      gradient_rng_(make_rng(seed, {tag(Stream::gradient)})),
      sigma_rng_(make_rng(seed, {tag(Stream::sigma)})) {}

double SurrogateEngine::sigma(std::span<const double> psi) {
  if (!compute_sigma_) return 0.0;
  return surrogate::uncertainty_sigma(ensemble_, psi, xdist_, config_.sigma_samples,
                                      sigma_rng_);
}

void SurrogateEngine::call(std::span<const double> psi, double epsilon) {
  const surrogate::TrustRegion region{std::vector<double>(psi.begin(), psi.end()), epsilon};
  if (warm_start_) {
    buffer_.evict_calls_before(buffer_.calls() - config_.warm_start_window);
  }
  surrogate::acquire_data(problem_, region, xdist_, buffer_, episode_index_,
                          acquisition_rng_);
  if (warm_start_) {
    const std::int64_t current = buffer_.calls() - 1;
    auto data = surrogate::warm_start_dataset(buffer_, region, current, training_rng_);
    ensemble_.train(data, training_rng_, /*cold_start=*/false);
  } else {
    ensemble_.train(surrogate::filter_history(buffer_, region), training_rng_,
                    /*cold_start=*/true);
  }
}

std::vector<double> SurrogateEngine::gradient(std::span<const double> psi) {
  return surrogate::surrogate_objective_gradient(ensemble_, psi, xdist_, objective_,
                                                 config_.grad_samples, gradient_rng_,
                                                 config_.gradient_mode);
}

std::uint64_t SurrogateEngine::evaluations_per_call() const {
  return static_cast<std::uint64_t>(problem_.M) * problem_.N;
}

Controller policy_controller(const policy::ActorCritic& ac, bool deterministic) {
  return [&ac, deterministic](const policy::PolicyState& s, Rng& rng) {
    return ac.sample(s, rng, deterministic);
  };
}

ValueFunction critic_value(const policy::ActorCritic& ac) {
  return [&ac](const policy::PolicyState& s) { return ac.value(s); };
}

namespace {

json xdist_json(const sim::XDistribution& d) {
  return {{"family", d.family == sim::XDistribution::Family::uniform ? "uniform"
                                                                      : "gaussian_uniform_mean"},
          {"lower", d.lower},
          {"upper", d.upper}};
}

sim::XDistribution xdist_from(const json& j) {
  sim::XDistribution d;
  d.family = j.at("family").get<std::string>() == "uniform"
                 ? sim::XDistribution::Family::uniform
                 : sim::XDistribution::Family::gaussian_uniform_mean;
  d.lower = j.at("lower").get<std::vector<double>>();
  d.upper = j.at("upper").get<std::vector<double>>();
  return d;
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double number_or_nan(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

json number_array(const std::vector<double>& values) {
  json out = json::array();
  for (double v : values) out.push_back(finite_or_null(v));
  return out;
}

}  // namespace

json to_json(const EpisodeRecord& r) {
  json transitions = json::array();
  for (const auto& t : r.transitions) {
    json a = {{"call", t.action.call},
              {"call_probability", t.action.call_probability},
              {"log_prob_b", t.action.log_prob_b}};
    if (t.action.epsilon) {
      a["epsilon"] = *t.action.epsilon;
      a["epsilon_raw"] = t.action.epsilon_raw;
      a["log_prob_eps"] = t.action.log_prob_eps.value_or(0.0);
    }
    transitions.push_back({{"t", t.state.t},
                           {"l", t.state.l},
                           {"psi", t.state.psi},
                           {"sigma", t.state.sigma},
                           {"action", std::move(a)},
                           {"reward", t.reward},
                           {"value", t.value},
                           {"objective", finite_or_null(t.objective)},
                           {"done", t.done ? json(to_string(*t.done)) : json(nullptr)}});
  }
  return {{"method", r.method},
          {"seed", r.seed},
          {"episode_index", r.episode_index},
          {"outcome", to_string(r.outcome)},
          {"total_calls", r.total_calls},
          {"steps", r.steps},
          {"return", r.episode_return},
          {"function_evaluations", r.function_evaluations},
          {"objective_trace", number_array(r.objective_trace)},
          {"call_steps", r.call_steps},
          {"final_psi", r.final_psi},
          {"final_objective", finite_or_null(r.final_objective)},
          {"mean_call_probability", r.mean_call_probability},
          {"xdist", xdist_json(r.xdist)},
          {"diagnostic", r.diagnostic},
          {"transitions", std::move(transitions)}};
}

EpisodeRecord episode_from_json(const json& j) {
  EpisodeRecord r;
  r.method = j.at("method").get<std::string>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.episode_index = j.at("episode_index").get<std::int64_t>();
  r.outcome = done_kind_from_string(j.at("outcome").get<std::string>());
  r.total_calls = j.at("total_calls").get<std::int64_t>();
  r.steps = j.at("steps").get<std::int64_t>();
  r.episode_return = j.at("return").get<double>();
  r.function_evaluations = j.at("function_evaluations").get<std::uint64_t>();
  for (const auto& v : j.at("objective_trace")) r.objective_trace.push_back(number_or_nan(v));
  r.call_steps = j.at("call_steps").get<std::vector<std::int64_t>>();
  r.final_psi = j.at("final_psi").get<std::vector<double>>();
  r.final_objective = number_or_nan(j.at("final_objective"));
  r.mean_call_probability = j.at("mean_call_probability").get<double>();
  r.xdist = xdist_from(j.at("xdist"));
  r.diagnostic = j.value("diagnostic", "");
  for (const auto& t : j.value("transitions", json::array())) {
    Transition tr;
    tr.state.t = t.at("t").get<std::int64_t>();
    tr.state.l = t.at("l").get<std::int64_t>();
    tr.state.psi = t.at("psi").get<std::vector<double>>();
    tr.state.sigma = t.at("sigma").get<double>();
    const auto& a = t.at("action");
    tr.action.call = a.at("call").get<bool>();
    tr.action.call_probability = a.at("call_probability").get<double>();
    tr.action.log_prob_b = a.at("log_prob_b").get<double>();
    if (a.contains("epsilon")) {
      tr.action.epsilon = a.at("epsilon").get<double>();
      tr.action.epsilon_raw = a.at("epsilon_raw").get<double>();
      tr.action.log_prob_eps = a.at("log_prob_eps").get<double>();
    }
    tr.reward = t.at("reward").get<double>();
    tr.value = t.at("value").get<double>();
    tr.objective = number_or_nan(t.at("objective"));
    if (!t.at("done").is_null()) tr.done = done_kind_from_string(t.at("done").get<std::string>());
    r.transitions.push_back(std::move(tr));
  }
  return r;
}

}  // namespace pgso::rl
