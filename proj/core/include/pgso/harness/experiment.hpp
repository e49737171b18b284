#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pgso/harness/config.hpp"
#include "pgso/harness/metrics.hpp"
#include "pgso/rl/episode.hpp"
#include "pgso/rl/trainer.hpp"

namespace pgso::harness {

struct SeedOutcome {
  std::uint64_t seed = 0;
  bool ok = true;
  std::size_t episodes = 0;
  std::size_t failed_episodes = 0;
  std::string diagnostic;
};

struct RunResult {
  MetricsReport metrics;
  std::vector<SeedOutcome> seeds;
  std::vector<rl::EpisodeRecord> episodes;
  /// Training logs per seed (empty for baselines and evaluate-only runs).
  std::vector<std::vector<rl::IterationLog>> training;
};

enum class RunMode {
  /// Train policy methods first; baselines only evaluate.
  train_and_evaluate,
  /// Evaluate a given policy checkpoint (or a baseline) without training.
  evaluate_only,
};

/// Runs every seed of the experiment and writes the run directory:
///   config.json, manifest.json, metrics.json, amo_curve.csv, anc.csv,
///   training_curve.csv, seed_<s>/episode_<e>.json,
///   seed_<s>/training_log.jsonl, seed_<s>/policy.json and, for the
///   submanifold problem, embedding.json.
/// A fault in one seed is recorded in the manifest; the other seeds still
/// run and metrics cover the successful episodes only.
RunResult run_experiment(const ExperimentConfig& config, RunMode mode = RunMode::train_and_evaluate,
                         const std::optional<std::filesystem::path>& policy_checkpoint = {});

/// Evaluation seed stream of one master seed, shared by policies and
/// baselines so both see the same x distributions and oracle draws.
std::uint64_t evaluation_seed(std::uint64_t seed);

/// Recomputes the metrics of a run directory from its episode files and
/// rewrites metrics.json, amo_curve.csv and anc.csv.
MetricsReport recompute_metrics(const std::filesystem::path& run_dir);

/// Every episode file of a run directory, ordered by seed then episode.
std::vector<rl::EpisodeRecord> load_episodes(const std::filesystem::path& run_dir);

/// Writes JSON with fixed formatting.
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace pgso::harness
