#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pgso/rl/episode.hpp"

namespace pgso::harness {

/// Mean number of simulator calls per episode. Throws on an empty set.
double compute_anc(std::span<const std::int64_t> total_calls);
double compute_anc(std::span<const rl::EpisodeRecord> episodes);

/// Mean over episodes with at least k recorded calls of the minimum of their
/// first k call-time objective values; absent when no episode qualifies.
std::optional<double> compute_amo(std::span<const std::vector<double>> traces, std::size_t k);
std::optional<double> compute_amo(std::span<const rl::EpisodeRecord> episodes, std::size_t k);

struct AmoPoint {
  std::size_t k = 0;
  double mean = 0.0;
  double std = 0.0;
  double min = 0.0;
  double max = 0.0;
  std::size_t count = 0;
};

struct MetricsReport {
  std::string method;
  std::size_t episodes = 0;
  /// Failed episodes left out of every statistic.
  std::size_t excluded_episodes = 0;
  double anc = 0.0;
  double anc_std = 0.0;
  double anc_min = 0.0;
  double anc_max = 0.0;
  double terminated_fraction = 0.0;
  std::vector<AmoPoint> amo_curve;
};

/// ANC with population std / min / max over episodes pooled across seeds,
/// and the AMO curve for k = 1 .. max calls. Failed episodes are excluded.
MetricsReport compute_metrics(const std::string& method,
                              std::span<const rl::EpisodeRecord> episodes);

nlohmann::json to_json(const MetricsReport& report);
void write_amo_csv(const std::filesystem::path& path, const MetricsReport& report);
void write_anc_csv(const std::filesystem::path& path, const MetricsReport& report);

}  // namespace pgso::harness
