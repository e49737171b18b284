#include <cmath>
#include <memory>

#include <gtest/gtest.h>

#include "pgso/baselines/baselines.hpp"
#include "pgso/errors.hpp"
#include "pgso/sim/benchmarks.hpp"

namespace pgso::baselines {
namespace {

// y = sum psi_d^2, no noise.
class Quadratic : public sim::Simulator {
 public:
  nn::Tensor simulate(std::span<const double> psi, const nn::Tensor& xs, Rng&) override {
    double v = 0;
    for (double p : psi) v += p * p;
    nn::Tensor y = nn::Tensor::matrix(xs.rows(), 1);
    for (std::size_t i = 0; i < xs.rows(); ++i) y[i] = v;
    return y;
  }
};

sim::Problem quadratic_problem() {
  sim::Problem p;
  p.kind = sim::ProblemKind::external;
  p.name = "quadratic";
  p.psi_dim = 3;
  p.x_dim = 1;
  p.tau = 1e-3;
  p.psi0 = {1.0, -0.5, 2.0};
  p.M = 4;
  p.N = 50;
  p.x_canonical = {sim::XDistribution::Family::uniform, {0.0}, {1.0}};
  p.objective.kind = sim::ObjectiveSpec::Kind::mean_y;
  p.simulator = std::make_shared<Quadratic>();
  return p;
}

BaselineConfig small_config() {
  BaselineConfig cfg;
  cfg.surrogate.hidden = {16, 16};
  cfg.surrogate.z_dim = 2;
  cfg.episode.oracle_samples = 1000;
  return cfg;
}

TEST(Method, StringRoundTrip) {
  for (auto m : {Method::lgso, Method::lgso_ensemble, Method::numdiff}) {
    EXPECT_EQ(method_from_string(to_string(m)), m);
  }
  EXPECT_EQ(method_from_string("lgso_e"), Method::lgso_ensemble);
  EXPECT_THROW(method_from_string("bock"), ConfigError);
}

TEST(CentralDifference, QuadraticIsExact) {
  auto f = [](std::span<const double> x) {
    double v = 0;
    for (double a : x) v += a * a;
    return v;
  };
  const std::vector<double> psi{1.0, -0.5, 2.0};
  const auto g = central_difference_gradient(f, psi, 0.05);
  for (std::size_t d = 0; d < psi.size(); ++d) EXPECT_NEAR(g[d], 2 * psi[d], 1e-12);
  EXPECT_THROW(central_difference_gradient(f, psi, 0.0), ConfigError);
}

TEST(CentralDifference, CubicErrorIsSecondOrder) {
  auto f = [](std::span<const double> x) { return x[0] * x[0] * x[0]; };
  const std::vector<double> psi{0.7};
  const double e1 = std::abs(central_difference_gradient(f, psi, 0.1)[0] - 3 * 0.49);
  const double e2 = std::abs(central_difference_gradient(f, psi, 0.05)[0] - 3 * 0.49);
  EXPECT_NEAR(e1, 0.01, 1e-12);
  EXPECT_NEAR(e1 / e2, 4.0, 1e-6);
}

TEST(Numdiff, EngineGradientOnNoiselessQuadratic) {
  const auto p = quadratic_problem();
  NumdiffEngine engine(p, p.x_canonical, 0.05, 1);
  engine.call(p.psi0, 0.5);
  const auto g = engine.gradient(p.psi0);
  for (std::size_t d = 0; d < 3; ++d) EXPECT_NEAR(g[d], 2 * p.psi0[d], 1e-9);
  EXPECT_EQ(engine.evaluations_per_call(), 2u * 3u * 50u);
  EXPECT_EQ(engine.sigma(p.psi0), 0.0);
}

TEST(Numdiff, EpisodeCountsOneCallPerGradient) {
  const auto p = quadratic_problem();
  auto cfg = small_config();
  cfg.episode.L = 8;
  const auto rec = run_baseline(p, Method::numdiff, cfg, 0, 4);
  EXPECT_EQ(rec.method, "NumDiff");
  EXPECT_EQ(rec.total_calls, rec.steps);
  EXPECT_EQ(rec.function_evaluations, static_cast<std::uint64_t>(rec.total_calls) * 2 * 3 * 50);
}

TEST(Numdiff, RosenbrockEvaluationCount) {
  auto p = sim::make_rosenbrock();
  NumdiffEngine engine(p, p.x_canonical, 0.05, 1);
  EXPECT_EQ(engine.evaluations_per_call(), 2u * 10u * 3000u);
}

TEST(Lgso, AlwaysCallsAndExhaustsBudget) {
  auto p = sim::make_three_hump();
  p.N = 100;
  auto cfg = small_config();
  cfg.episode.L = 5;
  const auto rec = run_baseline(p, Method::lgso, cfg, 0, 3);
  EXPECT_EQ(rec.method, "L-GSO");
  EXPECT_EQ(rec.total_calls, rec.steps);
  if (rec.outcome != rl::DoneKind::terminated) {
    EXPECT_EQ(rec.outcome, rl::DoneKind::call_budget);
    EXPECT_EQ(rec.total_calls, 5);
    EXPECT_DOUBLE_EQ(rec.episode_return, -6.0);
  }
  EXPECT_EQ(rec.objective_trace.size(), static_cast<std::size_t>(rec.total_calls));
  for (const auto& t : rec.transitions) {
    EXPECT_TRUE(t.action.call);
    EXPECT_EQ(t.state.sigma, 0.0);
  }
  EXPECT_EQ(rec.function_evaluations, static_cast<std::uint64_t>(rec.total_calls) * 5 * 100);
}

TEST(LgsoEnsemble, IdenticalMembersFollowSingleSurrogate) {
  auto p = sim::make_three_hump();
  p.N = 200;
  auto cfg = small_config();
  cfg.episode.L = 6;
  cfg.identical_members = true;
  const auto single = run_baseline(p, Method::lgso, cfg, 0, 8);
  const auto ens = run_baseline(p, Method::lgso_ensemble, cfg, 0, 8);
  ASSERT_EQ(single.steps, ens.steps);
  for (std::size_t t = 0; t < single.transitions.size(); ++t) {
    for (std::size_t d = 0; d < 2; ++d) {
      EXPECT_NEAR(single.transitions[t].state.psi[d], ens.transitions[t].state.psi[d], 1e-9);
    }
  }
  EXPECT_EQ(ens.method, "L-GSO-E");
}

TEST(LgsoEnsemble, OneMemberMatchesLgsoExactly) {
  auto p = sim::make_three_hump();
  p.N = 200;
  auto cfg = small_config();
  cfg.episode.L = 4;
  cfg.ensemble_size = 1;
  const auto a = run_baseline(p, Method::lgso, cfg, 0, 8);
  const auto b = run_baseline(p, Method::lgso_ensemble, cfg, 0, 8);
  auto ja = rl::to_json(a);
  auto jb = rl::to_json(b);
  ja.erase("method");
  jb.erase("method");
  EXPECT_EQ(ja, jb);
}

TEST(Baselines, EpisodeBatchesAreSeedDeterministic) {
  auto p = sim::make_rosenbrock();
  p.N = 100;
  auto cfg = small_config();
  cfg.episode.L = 3;
  const auto a = run_baseline_episodes(p, Method::lgso, cfg, 2, 5);
  const auto b = run_baseline_episodes(p, Method::lgso, cfg, 2, 5);
  ASSERT_EQ(a.size(), 2u);
  EXPECT_EQ(rl::to_json(a[1]), rl::to_json(b[1]));
  EXPECT_NE(rl::to_json(a[0]), rl::to_json(a[1]));
}

}  // namespace
}  // namespace pgso::baselines
