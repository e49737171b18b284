#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace pgso::rl {

/// Why an episode ended: A) objective reached tau, B) T steps used,
/// C) L calls used, or the run failed (non-finite psi, simulator fault).
enum class DoneKind { terminated, timestep_budget, call_budget, failed };

std::string to_string(DoneKind kind);
DoneKind done_kind_from_string(const std::string& s);

/// -b, plus on the final step: 0 (A), -(L - l) - 1 (B and failed), -1 (C).
double reward(bool call, std::optional<DoneKind> done, std::int64_t l, std::int64_t L);

struct GaeResult {
  std::vector<double> advantages;
  std::vector<double> returns;
};

/// delta_t = r_t + gamma V_{t+1} - V_t with V_n = bootstrap;
/// A_t = sum_k (gamma lambda)^k delta_{t+k}; returns are discounted reward
/// suffix sums.
GaeResult compute_gae(std::span<const double> rewards, std::span<const double> values,
                      double bootstrap_value, double gamma, double lambda);

}  // namespace pgso::rl
