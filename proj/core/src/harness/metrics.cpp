#include "pgso/harness/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "pgso/errors.hpp"

namespace pgso::harness {

namespace {

struct Summary {
  double mean = 0, std = 0, min = 0, max = 0;
};

Summary summarize(std::span<const double> v) {
  Summary s;
  if (v.empty()) return s;
  const double n = static_cast<double>(v.size());
  s.min = *std::min_element(v.begin(), v.end());
  s.max = *std::max_element(v.begin(), v.end());
  for (double x : v) s.mean += x;
  s.mean /= n;
  for (double x : v) s.std += (x - s.mean) * (x - s.mean);
  s.std = std::sqrt(s.std / n);
  return s;
}

std::vector<double> amo_values(std::span<const std::vector<double>> traces, std::size_t k) {
  if (k == 0) throw ConfigError("AMO is defined for k >= 1");
  std::vector<double> out;
  for (const auto& t : traces) {
    if (t.size() < k) continue;
    out.push_back(*std::min_element(t.begin(), t.begin() + static_cast<long>(k)));
  }
  return out;
}

std::vector<double> to_double(std::span<const std::int64_t> v) {
  return {v.begin(), v.end()};
}

}  // namespace

double compute_anc(std::span<const std::int64_t> total_calls) {
  if (total_calls.empty()) throw ConfigError("ANC of an empty episode set");
  const auto v = to_double(total_calls);
  return summarize(v).mean;
}

double compute_anc(std::span<const rl::EpisodeRecord> episodes) {
  std::vector<std::int64_t> calls;
  for (const auto& e : episodes) calls.push_back(e.total_calls);
  return compute_anc(calls);
}

std::optional<double> compute_amo(std::span<const std::vector<double>> traces, std::size_t k) {
  const auto v = amo_values(traces, k);
  if (v.empty()) return std::nullopt;
  return summarize(v).mean;
}

std::optional<double> compute_amo(std::span<const rl::EpisodeRecord> episodes, std::size_t k) {
  std::vector<std::vector<double>> traces;
  for (const auto& e : episodes) traces.push_back(e.objective_trace);
  return compute_amo(traces, k);
}

MetricsReport compute_metrics(const std::string& method,
                              std::span<const rl::EpisodeRecord> episodes) {
  MetricsReport r;
  r.method = method;
  std::vector<std::int64_t> calls;
  std::vector<std::vector<double>> traces;
  std::size_t terminated = 0;
  for (const auto& e : episodes) {
    if (e.outcome == rl::DoneKind::failed) {
      ++r.excluded_episodes;
      continue;
    }
    calls.push_back(e.total_calls);
    traces.push_back(e.objective_trace);
    if (e.outcome == rl::DoneKind::terminated) ++terminated;
  }
  r.episodes = calls.size();
  if (calls.empty()) return r;
  const auto c = summarize(to_double(calls));
  r.anc = c.mean;
  r.anc_std = c.std;
  r.anc_min = c.min;
  r.anc_max = c.max;
  r.terminated_fraction = static_cast<double>(terminated) / static_cast<double>(calls.size());
  const auto kmax = static_cast<std::size_t>(*std::max_element(calls.begin(), calls.end()));
  for (std::size_t k = 1; k <= kmax; ++k) {
    const auto v = amo_values(traces, k);
    if (v.empty()) continue;
    const auto s = summarize(v);
    r.amo_curve.push_back({k, s.mean, s.std, s.min, s.max, v.size()});
  }
  return r;
}

nlohmann::json to_json(const MetricsReport& r) {
  nlohmann::json curve = nlohmann::json::array();
  for (const auto& p : r.amo_curve) {
    curve.push_back({{"k", p.k},
                     {"amo", p.mean},
                     {"std", p.std},
                     {"min", p.min},
                     {"max", p.max},
                     {"count", p.count}});
  }
  return {{"method", r.method},
          {"episodes", r.episodes},
          {"excluded_episodes", r.excluded_episodes},
          {"anc", r.anc},
          {"anc_std", r.anc_std},
          {"anc_min", r.anc_min},
          {"anc_max", r.anc_max},
          {"terminated_fraction", r.terminated_fraction},
          {"amo_curve", std::move(curve)}};
}

namespace {

std::ofstream open_csv(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out.precision(17);
  return out;
}

}  // namespace

void write_amo_csv(const std::filesystem::path& path, const MetricsReport& r) {
  auto out = open_csv(path);
  out << "k,amo,std,min,max,count\n";
  for (const auto& p : r.amo_curve) {
    out << p.k << ',' << p.mean << ',' << p.std << ',' << p.min << ',' << p.max << ','
        << p.count << '\n';
  }
}

void write_anc_csv(const std::filesystem::path& path, const MetricsReport& r) {
  auto out = open_csv(path);
  out << "method,anc,std,min,max,episodes,excluded\n";
  out << r.method << ',' << r.anc << ',' << r.anc_std << ',' << r.anc_min << ',' << r.anc_max
      << ',' << r.episodes << ',' << r.excluded_episodes << '\n';
}

}  // namespace pgso::harness
