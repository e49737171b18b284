#include "pgso/harness/config.hpp"

#include <fstream>
#include <set>

#include "pgso/errors.hpp"
#include "pgso/sim/benchmarks.hpp"

namespace pgso::harness {

using json = nlohmann::json;

namespace {

/// Reads known keys into fields and rejects anything left over.
class Reader {
 public:
  Reader(const json& j, std::string context) : j_(j), context_(std::move(context)) {
    if (!j_.is_object()) throw ConfigError(context_ + " must be an object");
  }

  template <class T>
  void get(const std::string& key, T& field) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      field = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(context_ + "." + key + ": " + e.what());
    }
  }

  template <class T>
  void get(const std::string& key, std::optional<T>& field) {
    seen_.insert(key);
    if (!j_.contains(key) || j_.at(key).is_null()) return;
    T v;
    get(key, v);
    field = v;
  }

  const json* child(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!seen_.count(item.key())) {
        throw ConfigError("unknown config key " + context_ + "." + item.key());
      }
    }
  }

 private:
  const json& j_;
  std::string context_;
  std::set<std::string> seen_;
};

template <class T>
json optional_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

std::string gradient_mode_string(surrogate::GradientMode m) {
  return m == surrogate::GradientMode::mean_of_grads ? "mean_of_grads" : "grad_of_mean";
}

surrogate::GradientMode gradient_mode_from(const std::string& s) {
  if (s == "mean_of_grads") return surrogate::GradientMode::mean_of_grads;
  if (s == "grad_of_mean") return surrogate::GradientMode::grad_of_mean;
  throw ConfigError("unknown gradient mode '" + s + "'");
}

void read(const json& j, surrogate::SurrogateConfig& c) {
  Reader r(j, "surrogate");
  r.get("hidden", c.hidden);
  r.get("z_dim", c.z_dim);
  r.get("epochs", c.epochs);
  r.get("lr", c.lr);
  r.get("batch_size", c.batch_size);
  r.get("standardize", c.standardize);
  r.get("max_train_records", c.max_train_records);
  r.finish();
}

void read(const json& j, rl::EpisodeConfig& c) {
  Reader r(j, "episode");
  r.get("T", c.T);
  r.get("L", c.L);
  r.get("psi_lr", c.psi_lr);
  r.get("sigma_samples", c.sigma_samples);
  r.get("grad_samples", c.grad_samples);
  r.get("oracle_samples", c.oracle_samples);
  std::string mode = gradient_mode_string(c.gradient_mode);
  r.get("gradient_mode", mode);
  c.gradient_mode = gradient_mode_from(mode);
  r.get("deterministic_actions", c.deterministic_actions);
  r.get("record_transitions", c.record_transitions);
  r.get("warm_start_window", c.warm_start_window);
  r.finish();
}

void read(const json& j, rl::PPOConfig& c) {
  Reader r(j, "ppo");
  r.get("clip", c.clip);
  r.get("gae_lambda", c.gae_lambda);
  r.get("discount", c.discount);
  r.get("kl_threshold_b", c.kl_threshold_b);
  r.get("kl_threshold_eps", c.kl_threshold_eps);
  r.get("max_actor_updates", c.max_actor_updates);
  r.get("actor_lr", c.actor_lr);
  r.get("critic_lr", c.critic_lr);
  r.get("critic_mse_target", c.critic_mse_target);
  r.get("max_critic_updates", c.max_critic_updates);
  r.get("episodes_per_iteration", c.episodes_per_iteration);
  r.get("normalize_advantages", c.normalize_advantages);
  r.finish();
}

void read(const json& j, policy::PolicyConfig& c) {
  Reader r(j, "policy");
  r.get("hidden", c.hidden);
  r.get("epsilon_min", c.epsilon_min);
  r.get("epsilon_max", c.epsilon_max);
  r.get("output_init_scale", c.output_init_scale);
  r.finish();
}

void read(const json& j, sim::ObjectiveSpec& o) {
  Reader r(j, "objective");
  std::string kind = sim::to_string(o.kind);
  r.get("kind", kind);
  o.kind = sim::objective_kind_from_string(kind);
  r.get("alpha1", o.alpha1);
  r.get("alpha2", o.alpha2);
  r.get("charge_column", o.charge_column);
  r.finish();
}

json objective_json(const sim::ObjectiveSpec& o) {
  return {{"kind", sim::to_string(o.kind)},
          {"alpha1", o.alpha1},
          {"alpha2", o.alpha2},
          {"charge_column", o.charge_column}};
}

void read(const json& j, sim::ExternalProblemConfig& c) {
  Reader r(j, "problem.external");
  r.get("name", c.name);
  r.get("address", c.endpoint.address);
  std::int64_t timeout_ms = c.endpoint.timeout.count();
  r.get("timeout_ms", timeout_ms);
  c.endpoint.timeout = std::chrono::milliseconds(timeout_ms);
  r.get("psi_dim", c.psi_dim);
  r.get("y_dim", c.y_dim);
  r.get("psi0", c.psi0);
  r.get("x_lower", c.x_lower);
  r.get("x_upper", c.x_upper);
  r.get("tau", c.tau);
  r.get("epsilon", c.epsilon_default);
  r.get("M", c.M);
  r.get("N", c.N);
  if (const json* o = r.child("objective")) read(*o, c.objective);
  r.finish();
}

json external_json(const sim::ExternalProblemConfig& c) {
  return {{"name", c.name},
          {"address", c.endpoint.address},
          {"timeout_ms", c.endpoint.timeout.count()},
          {"psi_dim", c.psi_dim},
          {"y_dim", c.y_dim},
          {"psi0", c.psi0},
          {"x_lower", c.x_lower},
          {"x_upper", c.x_upper},
          {"tau", c.tau},
          {"epsilon", c.epsilon_default},
          {"M", c.M},
          {"N", c.N},
          {"objective", objective_json(c.objective)}};
}

ProblemSpec read_problem(const json& j) {
  ProblemSpec p;
  Reader r(j, "problem");
  std::string kind = sim::to_string(p.kind);
  std::string mode = sim::to_string(p.x_mode);
  r.get("kind", kind);
  r.get("x_mode", mode);
  p.kind = sim::problem_kind_from_string(kind);
  p.x_mode = sim::x_mode_from_string(mode);
  r.get("embedding_seed", p.embedding_seed);
  r.get("tau", p.tau);
  r.get("epsilon", p.epsilon);
  r.get("M", p.M);
  r.get("N", p.N);
  r.get("psi0", p.psi0);
  if (const json* e = r.child("external")) read(*e, p.external);
  r.finish();
  return p;
}

json problem_json(const ProblemSpec& p) {
  json j = {{"kind", sim::to_string(p.kind)},
            {"x_mode", sim::to_string(p.x_mode)},
            {"embedding_seed", p.embedding_seed},
            {"tau", optional_json(p.tau)},
            {"epsilon", optional_json(p.epsilon)},
            {"M", optional_json(p.M)},
            {"N", optional_json(p.N)},
            {"psi0", optional_json(p.psi0)}};
  if (p.kind == sim::ProblemKind::external) j["external"] = external_json(p.external);
  return j;
}

}  // namespace

sim::Problem build_problem(const ProblemSpec& spec) {
  sim::Problem p;
  switch (spec.kind) {
    case sim::ProblemKind::three_hump:
      p = sim::make_three_hump(spec.x_mode);
      break;
    case sim::ProblemKind::rosenbrock:
      p = sim::make_rosenbrock(spec.x_mode);
      break;
    case sim::ProblemKind::submanifold_hump:
      p = sim::make_submanifold_hump(spec.x_mode, spec.embedding_seed);
      break;
    case sim::ProblemKind::external:
      p = sim::make_external_problem(spec.external);
      break;
  }
  if (spec.tau) p.tau = *spec.tau;
  if (spec.epsilon) {
    if (!(*spec.epsilon > 0.0)) throw ConfigError("epsilon must be positive");
    p.epsilon_default = *spec.epsilon;
  }
  if (spec.M) p.M = *spec.M;
  if (spec.N) p.N = *spec.N;
  if (spec.psi0) {
    if (spec.psi0->size() != p.psi_dim) throw DimensionError("psi0 override has wrong length");
    p.psi0 = *spec.psi0;
  }
  if (p.M == 0 || p.N == 0) throw ConfigError("M and N must be positive");
  return p;
}

std::string to_string(MethodKind m) {
  switch (m) {
    case MethodKind::pi_e: return "pi_E";
    case MethodKind::pi_al_e: return "pi_AL_E";
    case MethodKind::pi_al_g_e: return "pi_AL_G_E";
    case MethodKind::lgso: return "lgso";
    case MethodKind::lgso_e: return "lgso_e";
    case MethodKind::numdiff: return "numdiff";
  }
  return "";
}

MethodKind method_kind_from_string(const std::string& s) {
  for (auto m : {MethodKind::pi_e, MethodKind::pi_al_e, MethodKind::pi_al_g_e, MethodKind::lgso,
                 MethodKind::lgso_e, MethodKind::numdiff}) {
    if (to_string(m) == s) return m;
  }
  throw ConfigError("unknown method '" + s + "'");
}

bool is_policy_method(MethodKind m) {
  return m == MethodKind::pi_e || m == MethodKind::pi_al_e || m == MethodKind::pi_al_g_e;
}

policy::PolicyVariant policy_variant(MethodKind m) {
  switch (m) {
    case MethodKind::pi_e: return policy::PolicyVariant::pi_e;
    case MethodKind::pi_al_e: return policy::PolicyVariant::pi_al_e;
    case MethodKind::pi_al_g_e: return policy::PolicyVariant::pi_al_g_e;
    default: throw ConfigError(to_string(m) + " is not a policy method");
  }
}

baselines::Method baseline_method(MethodKind m) {
  switch (m) {
    case MethodKind::lgso: return baselines::Method::lgso;
    case MethodKind::lgso_e: return baselines::Method::lgso_ensemble;
    case MethodKind::numdiff: return baselines::Method::numdiff;
    default: throw ConfigError(to_string(m) + " is not a baseline");
  }
}

rl::TrainingConfig ExperimentConfig::training(std::uint64_t seed) const {
  rl::TrainingConfig t;
  t.ppo = ppo;
  t.episode = episode;
  t.surrogate = surrogate;
  t.policy = policy;
  t.policy.T = episode.T;
  t.policy.L = episode.L;
  t.iterations = iterations;
  t.ensemble_size = ensemble_size;
  t.seed = seed;
  return t;
}

baselines::BaselineConfig ExperimentConfig::baseline() const {
  baselines::BaselineConfig b;
  b.episode = episode;
  b.surrogate = surrogate;
  b.ensemble_size = ensemble_size;
  b.fd_step = fd_step;
  return b;
}

ExperimentConfig default_config(const ProblemSpec& problem) {
  ExperimentConfig c;
  c.problem = problem;
  c.episode.psi_lr = rl::default_psi_lr(problem.kind);
  c.ppo.episodes_per_iteration = problem.kind == sim::ProblemKind::submanifold_hump ? 10 : 16;
  c.eval_episodes = problem.kind == sim::ProblemKind::external ? 20 : 32;
  return c;
}

ExperimentConfig config_from_json(const json& j) {
  Reader r(j, "config");
  const json* pj = r.child("problem");
  ExperimentConfig c = default_config(pj ? read_problem(*pj) : ProblemSpec{});
  std::string method = to_string(c.method);
  r.get("method", method);
  c.method = method_kind_from_string(method);
  r.get("seeds", c.seeds);
  r.get("eval_episodes", c.eval_episodes);
  r.get("iterations", c.iterations);
  r.get("ensemble_size", c.ensemble_size);
  r.get("fd_step", c.fd_step);
  std::string out = c.output_dir.string();
  r.get("output_dir", out);
  c.output_dir = out;
  if (const json* s = r.child("surrogate")) read(*s, c.surrogate);
  if (const json* e = r.child("episode")) read(*e, c.episode);
  if (const json* p = r.child("ppo")) read(*p, c.ppo);
  if (const json* p = r.child("policy")) read(*p, c.policy);
  r.finish();
  if (c.seeds.empty()) throw ConfigError("at least one seed is required");
  if (c.ensemble_size == 0) throw ConfigError("ensemble_size must be positive");
  if (!(c.episode.psi_lr > 0.0)) throw ConfigError("psi_lr must be positive");
  if (!(c.fd_step > 0.0)) throw ConfigError("fd_step must be positive");
  return c;
}

json to_json(const surrogate::SurrogateConfig& c) {
  return {{"hidden", c.hidden},
          {"z_dim", c.z_dim},
          {"epochs", c.epochs},
          {"lr", c.lr},
          {"batch_size", c.batch_size},
          {"standardize", c.standardize},
          {"max_train_records", c.max_train_records}};
}

json to_json(const rl::EpisodeConfig& c) {
  return {{"T", c.T},
          {"L", c.L},
          {"psi_lr", c.psi_lr},
          {"sigma_samples", c.sigma_samples},
          {"grad_samples", c.grad_samples},
          {"oracle_samples", c.oracle_samples},
          {"gradient_mode", gradient_mode_string(c.gradient_mode)},
          {"deterministic_actions", c.deterministic_actions},
          {"record_transitions", c.record_transitions},
          {"warm_start_window", c.warm_start_window}};
}

json to_json(const rl::PPOConfig& c) {
  return {{"clip", c.clip},
          {"gae_lambda", c.gae_lambda},
          {"discount", c.discount},
          {"kl_threshold_b", c.kl_threshold_b},
          {"kl_threshold_eps", c.kl_threshold_eps},
          {"max_actor_updates", c.max_actor_updates},
          {"actor_lr", c.actor_lr},
          {"critic_lr", c.critic_lr},
          {"critic_mse_target", c.critic_mse_target},
          {"max_critic_updates", c.max_critic_updates},
          {"episodes_per_iteration", c.episodes_per_iteration},
          {"normalize_advantages", c.normalize_advantages}};
}

json to_json(const policy::PolicyConfig& c) {
  return {{"hidden", c.hidden},
          {"epsilon_min", c.epsilon_min},
          {"epsilon_max", c.epsilon_max},
          {"output_init_scale", c.output_init_scale}};
}

json to_json(const ExperimentConfig& c) {
  return {{"problem", problem_json(c.problem)},
          {"method", to_string(c.method)},
          {"seeds", c.seeds},
          {"eval_episodes", c.eval_episodes},
          {"iterations", c.iterations},
          {"ensemble_size", c.ensemble_size},
          {"fd_step", c.fd_step},
          {"output_dir", c.output_dir.string()},
          {"surrogate", to_json(c.surrogate)},
          {"episode", to_json(c.episode)},
          {"ppo", to_json(c.ppo)},
          {"policy", to_json(c.policy)}};
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("malformed config " + path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

}  // namespace pgso::harness
