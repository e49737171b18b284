// Command-line front end for experiments.
//
//   pgso train     --config run.json
//   pgso evaluate  --config run.json --policy runs/x/seed_0/policy.json
//   pgso baseline  --config run.json --method lgso
//   pgso metrics   --run runs/x
//   pgso landscape --output three_hump.csv --samples 100

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pgso/errors.hpp"
#include "pgso/harness/config.hpp"
#include "pgso/harness/experiment.hpp"
#include "pgso/harness/landscape.hpp"

namespace {

using namespace pgso;
namespace fs = std::filesystem;

struct CommonOptions {
  std::string config;
  std::string output;
  std::vector<std::uint64_t> seeds;
  std::optional<std::size_t> episodes;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config, "experiment config (JSON)")->required()->check(
      CLI::ExistingFile);
  cmd->add_option("--output", o.output, "run directory (overrides output_dir)");
  cmd->add_option("--seeds", o.seeds, "master seeds (override the config)")->delimiter(',');
  cmd->add_option("--episodes", o.episodes, "evaluation episodes per seed");
}

harness::ExperimentConfig resolve(const CommonOptions& o) {
  auto cfg = harness::load_config(o.config);
  if (!o.output.empty()) cfg.output_dir = o.output;
  if (!o.seeds.empty()) cfg.seeds = o.seeds;
  if (o.episodes) cfg.eval_episodes = *o.episodes;
  return cfg;
}

int report(const harness::RunResult& r, const fs::path& dir) {
  std::size_t faults = 0;
  for (const auto& s : r.seeds) {
    if (!s.ok) {
      ++faults;
      std::cerr << "seed " << s.seed << " faulted: " << s.diagnostic << '\n';
    }
  }
  std::cout << "method " << r.metrics.method << ": " << r.metrics.episodes << " episodes, ANC "
            << r.metrics.anc << ", terminated " << r.metrics.terminated_fraction << '\n'
            << "run directory: " << dir.string() << '\n';
  return faults == r.seeds.size() ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"policy-guided surrogate optimization experiments"};
  app.require_subcommand(1);

  CommonOptions train_opts;
  auto* train = app.add_subcommand("train", "train a policy and evaluate it");
  add_common(train, train_opts);

  CommonOptions eval_opts;
  std::string policy_path;
  auto* evaluate = app.add_subcommand("evaluate", "evaluate a policy checkpoint or a baseline");
  add_common(evaluate, eval_opts);
  evaluate->add_option("--policy", policy_path, "policy checkpoint")->check(CLI::ExistingFile);

  CommonOptions base_opts;
  std::string method;
  auto* baseline = app.add_subcommand("baseline", "run a baseline method");
  add_common(baseline, base_opts);
  baseline->add_option("--method", method, "lgso | lgso_e | numdiff (overrides the config)");

  std::string run_dir;
  auto* metrics = app.add_subcommand("metrics", "recompute metrics of a run directory");
  metrics->add_option("--run", run_dir, "run directory")->required()->check(
      CLI::ExistingDirectory);

  std::string land_config, land_output = "landscape.csv";
  harness::GridSpec grid;
  std::size_t samples = 100;
  std::uint64_t land_seed = 0;
  auto* landscape = app.add_subcommand("landscape", "export a 2-D objective landscape");
  landscape->add_option("--config", land_config, "experiment config selecting the problem")
      ->check(CLI::ExistingFile);
  landscape->add_option("--output", land_output, "CSV path")->capture_default_str();
  landscape->add_option("--lo1", grid.lo1)->capture_default_str();
  landscape->add_option("--hi1", grid.hi1)->capture_default_str();
  landscape->add_option("--n1", grid.n1)->capture_default_str();
  landscape->add_option("--lo2", grid.lo2)->capture_default_str();
  landscape->add_option("--hi2", grid.hi2)->capture_default_str();
  landscape->add_option("--n2", grid.n2)->capture_default_str();
  landscape->add_option("--samples", samples, "draws per grid node")->capture_default_str();
  landscape->add_option("--seed", land_seed)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      auto cfg = resolve(train_opts);
      if (!harness::is_policy_method(cfg.method)) {
        throw ConfigError("train needs a policy method; use baseline for " +
                          harness::to_string(cfg.method));
      }
      return report(harness::run_experiment(cfg), cfg.output_dir);
    }
    if (*evaluate) {
      auto cfg = resolve(eval_opts);
      std::optional<fs::path> ckpt;
      if (!policy_path.empty()) ckpt = policy_path;
      return report(harness::run_experiment(cfg, harness::RunMode::evaluate_only, ckpt),
                    cfg.output_dir);
    }
    if (*baseline) {
      auto cfg = resolve(base_opts);
      if (!method.empty()) cfg.method = harness::method_kind_from_string(method);
      if (harness::is_policy_method(cfg.method)) {
        throw ConfigError("baseline needs lgso, lgso_e or numdiff");
      }
      return report(harness::run_experiment(cfg, harness::RunMode::evaluate_only),
                    cfg.output_dir);
    }
    if (*metrics) {
      const auto m = harness::recompute_metrics(run_dir);
      std::cout << "ANC " << m.anc << " over " << m.episodes << " episodes\n";
      return 0;
    }
    if (*landscape) {
      harness::ExperimentConfig cfg;
      if (!land_config.empty()) cfg = harness::load_config(land_config);
      const auto problem = harness::build_problem(cfg.problem);
      const auto points =
          harness::export_landscape(problem, problem.x_canonical, grid, samples, land_seed);
      harness::write_landscape_csv(land_output, points);
      std::cout << points.size() << " grid nodes written to " << land_output << '\n';
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
