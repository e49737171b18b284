#include "pgso/harness/experiment.hpp"

#include <algorithm>
#include <fstream>

#include "pgso/errors.hpp"
#include "pgso/sim/benchmarks.hpp"

namespace pgso::harness {

namespace fs = std::filesystem;
using json = nlohmann::json;

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

std::uint64_t evaluation_seed(std::uint64_t seed) {
  return derive_seed(seed, {tag(Stream::evaluation)});
}

namespace {

fs::path seed_dir(const fs::path& root, std::uint64_t seed) {
  return root / ("seed_" + std::to_string(seed));
}

void write_training_curve(const fs::path& path, const std::vector<std::uint64_t>& seeds,
                          const std::vector<std::vector<rl::IterationLog>>& logs) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out.precision(17);
  out << "seed,iteration,mean_calls,min_calls,max_calls,mean_return,mean_steps,"
         "terminated_fraction,mean_call_probability,critic_mse,actor_updates,critic_updates\n";
  for (std::size_t s = 0; s < logs.size(); ++s) {
    for (const auto& l : logs[s]) {
      out << seeds[s] << ',' << l.iteration << ',' << l.mean_calls << ',' << l.min_calls << ','
          << l.max_calls << ',' << l.mean_return << ',' << l.mean_steps << ','
          << l.terminated_fraction << ',' << l.mean_call_probability << ',' << l.critic_mse
          << ',' << l.actor_updates << ',' << l.critic_updates << '\n';
    }
  }
}

void write_embedding(const fs::path& path, std::uint64_t seed) {
  const auto emb = sim::SubmanifoldEmbedding::generate(seed);
  write_json(path, {{"seed", seed},
                    {"A", {{"shape", emb.A.shape()}, {"values", emb.A.to_vector()}}},
                    {"B", {{"shape", emb.B.shape()}, {"values", emb.B.to_vector()}}}});
}

void write_metrics(const fs::path& dir, const MetricsReport& m) {
  write_json(dir / "metrics.json", to_json(m));
  write_amo_csv(dir / "amo_curve.csv", m);
  write_anc_csv(dir / "anc.csv", m);
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& config, RunMode mode,
                         const std::optional<fs::path>& policy_checkpoint) {
  const fs::path& root = config.output_dir;
  fs::create_directories(root);
  write_json(root / "config.json", to_json(config));
  const sim::Problem problem = build_problem(config.problem);
  if (problem.kind == sim::ProblemKind::submanifold_hump) {
    write_embedding(root / "embedding.json", config.problem.embedding_seed);
  }
  const bool policy_method = is_policy_method(config.method);
  std::optional<policy::ActorCritic> fixed_policy;
  if (policy_method && mode == RunMode::evaluate_only) {
    if (!policy_checkpoint) throw ConfigError("evaluating a policy method needs a checkpoint");
    fixed_policy = policy::ActorCritic::load(*policy_checkpoint);
    if (fixed_policy->variant() != policy_variant(config.method)) {
      throw ConfigError("checkpoint variant does not match the configured method");
    }
  }

  RunResult result;
  for (const auto seed : config.seeds) {
    SeedOutcome outcome;
    outcome.seed = seed;
    std::vector<rl::IterationLog> log;
    const fs::path dir = seed_dir(root, seed);
    fs::create_directories(dir);
    auto persist = [&](const rl::EpisodeRecord& e) {
      write_json(dir / ("episode_" + std::to_string(e.episode_index) + ".json"), rl::to_json(e));
      ++outcome.episodes;
      if (e.outcome == rl::DoneKind::failed) ++outcome.failed_episodes;
      result.episodes.push_back(e);
    };
    try {
      const auto training = config.training(seed);
      if (policy_method) {
        std::optional<policy::ActorCritic> ac = fixed_policy;
        if (!ac) {
          std::ofstream log_out(dir / "training_log.jsonl");
          auto trained = rl::train_policy(
              problem, policy_variant(config.method), training,
              [&](const rl::IterationLog& l, const std::vector<rl::EpisodeRecord>&) {
                log_out << rl::to_json(l).dump() << '\n';
                log_out.flush();
                log.push_back(l);
              });
          ac = std::move(trained.policy);
          ac->save(dir / "policy.json");
        }
        const auto episodes = rl::evaluate_policy(problem, *ac, training, config.eval_episodes,
                                                  evaluation_seed(seed));
        for (const auto& e : episodes) persist(e);
      } else {
        const auto method = baseline_method(config.method);
        const auto b = config.baseline();
        for (std::size_t e = 0; e < config.eval_episodes; ++e) {
          persist(baselines::run_baseline(problem, method, b, static_cast<std::int64_t>(e),
                                          derive_seed(evaluation_seed(seed),
                                                      {tag(Stream::evaluation), e})));
        }
      }
    } catch (const std::exception& ex) {
      outcome.ok = false;
      outcome.diagnostic = ex.what();
    }
    result.training.push_back(std::move(log));
    result.seeds.push_back(outcome);
  }

  result.metrics = compute_metrics(to_string(config.method), result.episodes);
  write_metrics(root, result.metrics);
  if (policy_method && mode == RunMode::train_and_evaluate) {
    write_training_curve(root / "training_curve.csv", config.seeds, result.training);
  }

  json seeds = json::array();
  std::size_t faulted = 0;
  for (const auto& s : result.seeds) {
    if (!s.ok) ++faulted;
    seeds.push_back({{"seed", s.seed},
                     {"status", s.ok ? "ok" : "fault"},
                     {"episodes", s.episodes},
                     {"failed_episodes", s.failed_episodes},
                     {"diagnostic", s.diagnostic}});
  }
  write_json(root / "manifest.json",
             {{"method", to_string(config.method)},
              {"problem", sim::to_string(problem.kind)},
              {"mode", mode == RunMode::train_and_evaluate ? "train_and_evaluate" : "evaluate_only"},
              {"seeds", std::move(seeds)},
              {"faulted_seeds", faulted},
              {"metric_episodes", result.metrics.episodes},
              {"excluded_episodes", result.metrics.excluded_episodes}});
  return result;
}

std::vector<rl::EpisodeRecord> load_episodes(const fs::path& run_dir) {
  struct Entry {
    std::uint64_t seed;
    std::int64_t episode;
    fs::path path;
  };
  std::vector<Entry> entries;
  if (!fs::is_directory(run_dir)) throw ConfigError("not a run directory: " + run_dir.string());
  for (const auto& d : fs::directory_iterator(run_dir)) {
    const auto name = d.path().filename().string();
    if (!d.is_directory() || name.rfind("seed_", 0) != 0) continue;
    const auto seed = std::stoull(name.substr(5));
    for (const auto& f : fs::directory_iterator(d.path())) {
      const auto fname = f.path().filename().string();
      if (fname.rfind("episode_", 0) != 0 || f.path().extension() != ".json") continue;
      entries.push_back({seed, std::stoll(fname.substr(8)), f.path()});
    }
  }
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    return a.seed != b.seed ? a.seed < b.seed : a.episode < b.episode;
  });
  std::vector<rl::EpisodeRecord> out;
  for (const auto& e : entries) {
    std::ifstream in(e.path);
    out.push_back(rl::episode_from_json(json::parse(in)));
  }
  return out;
}

MetricsReport recompute_metrics(const fs::path& run_dir) {
  const auto episodes = load_episodes(run_dir);
  std::string method;
  if (fs::exists(run_dir / "manifest.json")) {
    std::ifstream in(run_dir / "manifest.json");
    method = json::parse(in).value("method", "");
  }
  auto m = compute_metrics(method, episodes);
  write_metrics(run_dir, m);
  return m;
}

}  // namespace pgso::harness
