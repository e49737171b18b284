#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pgso/baselines/baselines.hpp"
#include "pgso/rl/trainer.hpp"
#include "pgso/sim/external.hpp"
#include "pgso/sim/problem.hpp"

namespace pgso::harness {

/// Problem selector plus optional overrides of the built-in constants.
struct ProblemSpec {
  sim::ProblemKind kind = sim::ProblemKind::three_hump;
  sim::XMode x_mode = sim::XMode::fixed;
  std::uint64_t embedding_seed = 0;
  std::optional<double> tau;
  std::optional<double> epsilon;
  std::optional<std::size_t> M;
  std::optional<std::size_t> N;
  std::optional<std::vector<double>> psi0;
  /// Used when kind is external.
  sim::ExternalProblemConfig external;
};

sim::Problem build_problem(const ProblemSpec& spec);

enum class MethodKind { pi_e, pi_al_e, pi_al_g_e, lgso, lgso_e, numdiff };

std::string to_string(MethodKind m);
MethodKind method_kind_from_string(const std::string& s);
bool is_policy_method(MethodKind m);
policy::PolicyVariant policy_variant(MethodKind m);
baselines::Method baseline_method(MethodKind m);

struct ExperimentConfig {
  ProblemSpec problem;
  MethodKind method = MethodKind::pi_e;
  std::vector<std::uint64_t> seeds{0};
  std::size_t eval_episodes = 32;
  std::size_t iterations = 30;
  std::size_t ensemble_size = 3;
  rl::EpisodeConfig episode;
  surrogate::SurrogateConfig surrogate;
  policy::PolicyConfig policy;
  rl::PPOConfig ppo;
  double fd_step = 0.05;
  std::filesystem::path output_dir = "runs/experiment";

  rl::TrainingConfig training(std::uint64_t seed) const;
  baselines::BaselineConfig baseline() const;
};

/// Defaults that depend on the problem: psi learning rate, episodes per
/// PPO iteration and evaluation episode count.
ExperimentConfig default_config(const ProblemSpec& problem);

/// Parses a config; absent keys take their defaults, unknown keys are
/// rejected.
ExperimentConfig config_from_json(const nlohmann::json& j);
/// Full snapshot with every default written out.
nlohmann::json to_json(const ExperimentConfig& c);
ExperimentConfig load_config(const std::filesystem::path& path);

nlohmann::json to_json(const surrogate::SurrogateConfig& c);
nlohmann::json to_json(const rl::EpisodeConfig& c);
nlohmann::json to_json(const rl::PPOConfig& c);
nlohmann::json to_json(const policy::PolicyConfig& c);

}  // namespace pgso::harness
