#include "pgso/rl/reward.hpp"

#include "pgso/errors.hpp"

namespace pgso::rl {

std::string to_string(DoneKind kind) {
  switch (kind) {
    case DoneKind::terminated:
      return "terminated";
    case DoneKind::timestep_budget:
      return "timestep_budget";
    case DoneKind::call_budget:
      return "call_budget";
    case DoneKind::failed:
      return "failed";
  }
  return "unknown";
}

DoneKind done_kind_from_string(const std::string& s) {
  if (s == "terminated") return DoneKind::terminated;
  if (s == "timestep_budget") return DoneKind::timestep_budget;
  if (s == "call_budget") return DoneKind::call_budget;
  if (s == "failed") return DoneKind::failed;
  throw ConfigError("unknown episode outcome '" + s + "'");
}

double reward(bool call, std::optional<DoneKind> done, std::int64_t l, std::int64_t L) {
  if (l > L) throw ConfigError("call count exceeds the call budget");
  double r = call ? -1.0 : 0.0;
  if (done) {
    switch (*done) {
      case DoneKind::terminated:
        break;
      case DoneKind::timestep_budget:
      case DoneKind::failed:
        r += -static_cast<double>(L - l) - 1.0;
        break;
      case DoneKind::call_budget:
        r += -1.0;
        break;
    }
  }
  return r;
}

GaeResult compute_gae(std::span<const double> rewards, std::span<const double> values,
                      double bootstrap_value, double gamma, double lambda) {
  if (rewards.size() != values.size()) {
    throw DimensionError("GAE needs one value estimate per reward");
  }
  const std::size_t n = rewards.size();
  GaeResult out{std::vector<double>(n), std::vector<double>(n)};
  double next_value = bootstrap_value;
  double running_adv = 0.0;
  double running_ret = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    const double delta = rewards[i] + gamma * next_value - values[i];
    running_adv = delta + gamma * lambda * running_adv;
    running_ret = rewards[i] + gamma * running_ret;
    out.advantages[i] = running_adv;
    out.returns[i] = running_ret;
    next_value = values[i];
  }
  return out;
}

}  // namespace pgso::rl
