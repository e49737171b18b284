#include <cmath>
#include <numeric>
#include <random>
#include <map>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "pgso/errors.hpp"
#include "pgso/sim/benchmarks.hpp"
#include "pgso/surrogate/ensemble.hpp"
#include "pgso/surrogate/history.hpp"
#include "pgso/surrogate/trust_region.hpp"
#include "test_support.hpp"

namespace pgso::surrogate {
namespace {

using sim::Problem;
using sim::XDistribution;

SurrogateConfig small_config() {
  SurrogateConfig cfg;
  cfg.hidden = {32, 32};
  cfg.z_dim = 4;
  return cfg;
}

nn::Mlp constant_net(const SurrogateEnsemble& ens, double c) {
  nn::Mlp net = ens.member(0);
  for (auto* p : net.parameters()) {
    for (double& v : p->values()) v = 0.0;
  }
  for (double& v : net.layers().back().bias.values()) v = c;
  return net;
}

HistoryBuffer::Block block(std::vector<double> psi, std::size_t rows, double y) {
  HistoryBuffer::Block b;
  b.psi = std::move(psi);
  b.x = Tensor::matrix(rows, 1);
  b.y = Tensor::matrix(rows, 1);
  for (std::size_t i = 0; i < rows; ++i) {
    b.x[i] = static_cast<double>(i);
    b.y[i] = y;
  }
  return b;
}

class LinearSimulator : public sim::Simulator {
 public:
  LinearSimulator(std::vector<double> a, std::vector<double> b) : a_(a), b_(b) {}
  Tensor simulate(std::span<const double> psi, const Tensor& xs, Rng&) override {
    Tensor ys = Tensor::matrix(xs.rows(), 1);
    double base = 0;
    for (std::size_t j = 0; j < psi.size(); ++j) base += a_[j] * psi[j];
    for (std::size_t i = 0; i < xs.rows(); ++i) {
      double v = base;
      for (std::size_t j = 0; j < xs.cols(); ++j) v += b_[j] * xs.at(i, j);
      ys[i] = v;
    }
    return ys;
  }

 private:
  std::vector<double> a_, b_;
};

class FaultySimulator : public sim::Simulator {
 public:
  Tensor simulate(std::span<const double>, const Tensor& xs, Rng&) override {
    if (++calls_ == 3) throw SimulatorFault("boom");
    return Tensor::matrix(xs.rows(), 1);
  }

 private:
  int calls_ = 0;
};

TEST(TrustRegion, BoxMembership) {
  TrustRegion r{{0.0, 1.0}, 0.5};
  EXPECT_TRUE(r.contains(std::vector<double>{0.5, 0.5}));
  EXPECT_TRUE(r.contains(std::vector<double>{-0.2, 1.4}));
  EXPECT_FALSE(r.contains(std::vector<double>{0.51, 1.0}));
  EXPECT_FALSE(r.contains(std::vector<double>{0.0, 1.6}));
  EXPECT_THROW(r.contains(std::vector<double>{0.0}), DimensionError);
}

TEST(Lhs, SinglePointInsideBox) {
  TrustRegion r{{2.0, 0.0}, 0.5};
  Rng rng(1);
  Tensor p = lhs_sample_psi(r, 1, rng);
  ASSERT_EQ(p.rows(), 1u);
  EXPECT_TRUE(r.contains(p.row(0)));
}

// Per coordinate, each of the M strata must hold exactly one point.
void expect_stratified(const TrustRegion& r, const Tensor& points) {
  const std::size_t M = points.rows();
  for (std::size_t d = 0; d < r.dim(); ++d) {
    std::vector<int> counts(M, 0);
    for (std::size_t i = 0; i < M; ++i) {
      ASSERT_TRUE(r.contains(points.row(i)));
      const double u = (points.at(i, d) - (r.center[d] - r.epsilon)) / (2 * r.epsilon);
      auto bin = static_cast<std::size_t>(std::floor(u * static_cast<double>(M)));
      counts[std::min(bin, M - 1)]++;
    }
    for (int c : counts) ASSERT_EQ(c, 1);
  }
}

TEST(Lhs, FivePointsTwoDimensions) {
  TrustRegion r{{2.0, 0.0}, 0.5};
  Rng rng(2);
  expect_stratified(r, lhs_sample_psi(r, 5, rng));
}

TEST(Lhs, StratificationOnRandomRegions) {
  Rng rng(3);
  std::uniform_int_distribution<std::size_t> dim(1, 12), count(1, 40);
  std::uniform_real_distribution<double> center(-5, 5), eps(1e-3, 3);
  for (int trial = 0; trial < 1000; ++trial) {
    TrustRegion r;
    r.center.resize(dim(rng));
    for (double& c : r.center) c = center(rng);
    r.epsilon = eps(rng);
    expect_stratified(r, lhs_sample_psi(r, count(rng), rng));
  }
}

TEST(Acquire, RecordCountsPerProblem) {
  struct Case {
    Problem problem;
    std::size_t expected;
  };
  std::vector<Case> cases{{sim::make_three_hump(), 15000},
                          {sim::make_rosenbrock(), 48000},
                          {sim::make_submanifold_hump(sim::XMode::fixed, 1), 60000}};
  for (auto& c : cases) {
    HistoryBuffer buf(c.problem.psi_dim, c.problem.x_dim, c.problem.y_dim);
    Rng rng(4);
    TrustRegion r{c.problem.psi0, c.problem.epsilon_default};
    EXPECT_EQ(acquire_data(c.problem, r, c.problem.x_canonical, buf, 0, rng), c.expected);
    EXPECT_EQ(buf.record_count(), c.expected);
    EXPECT_EQ(buf.calls(), 1);
    EXPECT_EQ(buf.blocks().size(), c.problem.M);
    for (const auto& b : buf.blocks()) EXPECT_TRUE(r.contains(b.psi));
  }
}

TEST(Acquire, FaultLeavesBufferUntouched) {
  Problem p = sim::make_three_hump();
  p.simulator = std::make_shared<FaultySimulator>();
  p.N = 10;
  HistoryBuffer buf(2, 2, 1);
  Rng rng(1);
  TrustRegion r{p.psi0, 0.5};
  EXPECT_THROW(acquire_data(p, r, p.x_canonical, buf, 0, rng), SimulatorFault);
  EXPECT_EQ(buf.record_count(), 0u);
  EXPECT_EQ(buf.calls(), 0);
}

TEST(Filter, EmptyFullAndPartial) {
  HistoryBuffer buf(2, 1, 1);
  TrustRegion r{{0.0, 0.0}, 1.0};
  EXPECT_TRUE(filter_history(buf, r).empty());

  std::vector<HistoryBuffer::Block> blocks;
  blocks.push_back(block({0.5, 0.5}, 1, 1.0));
  blocks.push_back(block({2.0, 0.0}, 1, 2.0));
  blocks.push_back(block({-1.0, 1.0}, 1, 3.0));
  blocks.push_back(block({0.0, -1.5}, 1, 4.0));
  buf.append_call(std::move(blocks));

  Dataset part = filter_history(buf, r);
  ASSERT_EQ(part.size(), 2u);
  EXPECT_EQ(part.y[0], 1.0);
  EXPECT_EQ(part.y[1], 3.0);
  EXPECT_EQ(filter_history(buf, TrustRegion{{0.0, 0.0}, 10.0}).size(), 4u);
}

TEST(WarmStart, GeometricReplay) {
  HistoryBuffer buf(1, 1, 1);
  TrustRegion r{{0.0}, 1.0};
  Rng rng(5);
  // Call 0: 1000 in-region records split over two blocks plus one outside.
  std::vector<HistoryBuffer::Block> c0;
  c0.push_back(block({0.1}, 600, 0.0));
  c0.push_back(block({-0.3}, 400, 0.0));
  c0.push_back(block({5.0}, 300, 0.0));
  buf.append_call(std::move(c0));
  EXPECT_EQ(warm_start_dataset(buf, r, 0, rng).size(), 1000u);

  std::vector<HistoryBuffer::Block> c1;
  c1.push_back(block({0.2}, 1000, 1.0));
  buf.append_call(std::move(c1));
  std::vector<HistoryBuffer::Block> c2;
  c2.push_back(block({0.0}, 10, 2.0));
  buf.append_call(std::move(c2));

  Dataset d = warm_start_dataset(buf, r, 2, rng);
  std::map<double, std::size_t> by_y;
  for (std::size_t i = 0; i < d.size(); ++i) by_y[d.y[i]]++;
  EXPECT_EQ(by_y[2.0], 10u);
  EXPECT_EQ(by_y[1.0], 500u);
  EXPECT_EQ(by_y[0.0], 250u);

  // Subsampled rows are distinct records.
  std::set<double> xs;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d.y[i] == 1.0) xs.insert(d.x[i]);
  }
  EXPECT_EQ(xs.size(), 500u);
}

TEST(WarmStart, FloorOfOddCounts) {
  HistoryBuffer buf(1, 1, 1);
  TrustRegion r{{0.0}, 1.0};
  Rng rng(6);
  std::vector<HistoryBuffer::Block> c0;
  c0.push_back(block({0.0}, 1001, 0.0));
  buf.append_call(std::move(c0));
  std::vector<HistoryBuffer::Block> c1;
  c1.push_back(block({0.0}, 1, 1.0));
  buf.append_call(std::move(c1));
  EXPECT_EQ(warm_start_dataset(buf, r, 1, rng).size(), 500u + 1u);
}

TEST(History, EvictionAndCsv) {
  HistoryBuffer buf(1, 1, 1);
  for (int c = 0; c < 3; ++c) {
    std::vector<HistoryBuffer::Block> blocks;
    blocks.push_back(block({static_cast<double>(c)}, 2, c));
    buf.append_call(std::move(blocks));
  }
  EXPECT_EQ(buf.record_count(), 6u);
  buf.evict_calls_before(2);
  EXPECT_EQ(buf.record_count(), 2u);
  EXPECT_EQ(buf.calls(), 3);
  std::ostringstream out;
  buf.write_csv(out);
  EXPECT_EQ(out.str(), "psi_0,x_0,y_0,episode,call\n2,0,2,0,2\n2,1,2,0,2\n");
}

TEST(Ensemble, ConstantTargetIsLearned) {
  Dataset d{Tensor::matrix(4000, 2), Tensor::matrix(4000, 1), Tensor::matrix(4000, 1)};
  Rng rng(7);
  std::uniform_real_distribution<double> u(-1, 1);
  for (std::size_t i = 0; i < d.size(); ++i) {
    d.psi.at(i, 0) = u(rng);
    d.psi.at(i, 1) = u(rng);
    d.x[i] = u(rng);
    d.y[i] = 3.5;
  }
  for (bool standardize : {true, false}) {
    SurrogateConfig cfg = small_config();
    cfg.standardize = standardize;
    if (!standardize) {
      // Raw targets need many more steps to move the output bias to 3.5.
      cfg.epochs = 40;
      cfg.lr = 1e-2;
    }
    SurrogateEnsemble ens(2, 1, 1, cfg, {1, 2, 3});
    ens.train(d, rng);
    Tensor z = sample_latent(d.size(), cfg.z_dim, rng);
    for (const auto& p : ens.predict(d.psi, d.x, z)) {
      EXPECT_NEAR(p.matrix().mean(), 3.5, 0.1);
    }
  }
}

TEST(Ensemble, EqualSeedsGiveIdenticalMembers) {
  Problem hump = sim::make_three_hump();
  hump.N = 500;
  HistoryBuffer buf(2, 2, 1);
  Rng rng(8);
  TrustRegion r{hump.psi0, 0.5};
  acquire_data(hump, r, hump.x_canonical, buf, 0, rng);
  Dataset d = filter_history(buf, r);
  SurrogateEnsemble ens(2, 2, 1, small_config(), {42, 42, 7});
  ens.train(d, rng);
  EXPECT_TRUE(ens.member(0) == ens.member(1));
  EXPECT_FALSE(ens.member(0) == ens.member(2));

  // Cold-start retraining with the same stream reproduces the ensemble.
  SurrogateEnsemble a(2, 2, 1, small_config(), {1, 2, 3});
  SurrogateEnsemble b(2, 2, 1, small_config(), {1, 2, 3});
  Rng ra(9), rb(9);
  a.train(d, ra);
  b.train(d, rb);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_TRUE(a.member(i) == b.member(i));
}

TEST(Ensemble, TrainingReducesLoss) {
  Problem hump = sim::make_three_hump();
  hump.N = 1000;
  double before = 0, after = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    HistoryBuffer buf(2, 2, 1);
    Rng rng(100 + seed);
    TrustRegion r{hump.psi0, 0.5};
    acquire_data(hump, r, hump.x_canonical, buf, 0, rng);
    Dataset d = filter_history(buf, r);
    SurrogateEnsemble ens(2, 2, 1, small_config(), {seed, seed + 10, seed + 20});
    ens.set_scalers(ColumnScaler::fit([&] {
                      Tensor f = Tensor::matrix(d.size(), 4);
                      f.matrix().leftCols(2) = d.psi.matrix();
                      f.matrix().rightCols(2) = d.x.matrix();
                      return f;
                    }()),
                    ColumnScaler::fit(d.y));
    Rng eval(1);
    for (double v : ens.mse(d, eval)) before += v;
    ens.train(d, rng, /*cold_start=*/false);
    Rng eval2(1);
    for (double v : ens.mse(d, eval2)) after += v;
  }
  EXPECT_LE(after, before);
}

TEST(Ensemble, RejectsEmptyData) {
  SurrogateEnsemble ens(2, 2, 1, small_config(), {1});
  Rng rng(1);
  EXPECT_THROW(ens.train(Dataset{Tensor::matrix(0, 2), Tensor::matrix(0, 2),
                                 Tensor::matrix(0, 1)},
                         rng),
               ConfigError);
}

TEST(Sigma, ClosedFormStubs) {
  XDistribution xd = sim::make_three_hump().x_canonical;
  SurrogateEnsemble ens(2, 2, 1, small_config(), {1, 2, 3});
  for (std::size_t i = 0; i < 3; ++i) ens.set_member(i, constant_net(ens, 1.0 + i));
  Rng rng(1);
  EXPECT_NEAR(uncertainty_sigma(ens, std::vector<double>{2, 0}, xd, 512, rng),
              std::sqrt(2.0 / 3.0), 1e-12);
  EXPECT_NEAR(std::sqrt(2.0 / 3.0), 0.8164966, 1e-7);

  ens.set_member(1, constant_net(ens, 1.0));
  ens.set_member(2, constant_net(ens, 1.0));
  EXPECT_EQ(uncertainty_sigma(ens, std::vector<double>{2, 0}, xd, 512, rng), 0.0);
}

TEST(Sigma, IdenticalMembersAndPermutation) {
  XDistribution xd = sim::make_three_hump().x_canonical;
  SurrogateEnsemble same(2, 2, 1, small_config(), {5, 5, 5});
  Rng rng(2);
  EXPECT_NEAR(uncertainty_sigma(same, std::vector<double>{2, 0}, xd, 64, rng), 0.0, 1e-12);

  SurrogateEnsemble a(2, 2, 1, small_config(), {1, 2, 3});
  SurrogateEnsemble b(2, 2, 1, small_config(), {3, 1, 2});
  Rng ra(3), rb(3);
  const double sa = uncertainty_sigma(a, std::vector<double>{2, 0}, xd, 256, ra);
  const double sb = uncertainty_sigma(b, std::vector<double>{2, 0}, xd, 256, rb);
  EXPECT_GT(sa, 0.0);
  EXPECT_NEAR(sa, sb, 1e-12);
}

TEST(Sigma, MultiDimensionalOutputIsAveraged) {
  SurrogateEnsemble ens(1, 1, 2, small_config(), {1, 2});
  auto set = [&](std::size_t i, double c0, double c1) {
    nn::Mlp net = constant_net(ens, 0.0);
    net.layers().back().bias[0] = c0;
    net.layers().back().bias[1] = c1;
    ens.set_member(i, net);
  };
  set(0, 0.0, 2.0);  // mean 1
  set(1, 5.0, 1.0);  // mean 3
  XDistribution xd{XDistribution::Family::uniform, {0.0}, {1.0}};
  Rng rng(1);
  EXPECT_NEAR(uncertainty_sigma(ens, std::vector<double>{0.0}, xd, 16, rng), 1.0, 1e-12);
}

TEST(Gradient, ConstantMembersGiveZero) {
  XDistribution xd = sim::make_three_hump().x_canonical;
  SurrogateEnsemble ens(2, 2, 1, small_config(), {1, 2, 3});
  for (std::size_t i = 0; i < 3; ++i) ens.set_member(i, constant_net(ens, 2.0 * i));
  sim::Objective obj({sim::ObjectiveSpec::Kind::hump});
  Rng rng(1);
  for (double g : surrogate_objective_gradient(ens, std::vector<double>{2, 0}, xd, obj, 64, rng)) {
    EXPECT_EQ(g, 0.0);
  }
}

TEST(Gradient, MatchesFiniteDifferences) {
  Problem hump = sim::make_three_hump();
  hump.N = 500;
  HistoryBuffer buf(2, 2, 1);
  Rng rng(11);
  TrustRegion r{hump.psi0, 0.5};
  acquire_data(hump, r, hump.x_canonical, buf, 0, rng);
  SurrogateConfig cfg = small_config();
  SurrogateEnsemble ens(2, 2, 1, cfg, {4});
  ens.train(filter_history(buf, r), rng);
  sim::Objective obj(hump.objective);
  const std::vector<double> psi{1.9, 0.15};
  Rng g(77);
  auto grad = surrogate_objective_gradient(ens, psi, hump.x_canonical, obj, 512, g);
  auto fd = testing::central_differences(
      [&](const std::vector<double>& p) {
        Rng s(77);
        return surrogate_objective(ens, p, hump.x_canonical, obj, 512, s);
      },
      psi, 1e-6);  // small enough that few ReLU kinks fall inside the stencil
  for (std::size_t j = 0; j < 2; ++j) {
    EXPECT_LT(testing::relative_error(grad[j], fd[j], 1e-8), 1e-3) << j;
  }
}

TEST(Gradient, LinearObjectiveModesAgree) {
  Problem rb = sim::make_rosenbrock();
  rb.N = 200;
  HistoryBuffer buf(10, 1, 1);
  Rng rng(12);
  TrustRegion r{rb.psi0, 0.2};
  acquire_data(rb, r, rb.x_canonical, buf, 0, rng);
  SurrogateEnsemble ens(10, 1, 1, small_config(), {1, 2, 3});
  ens.train(filter_history(buf, r), rng);
  sim::Objective obj(rb.objective);
  Rng a(5), b(5);
  auto g1 = surrogate_objective_gradient(ens, rb.psi0, rb.x_canonical, obj, 256, a,
                                         GradientMode::mean_of_grads);
  auto g2 = surrogate_objective_gradient(ens, rb.psi0, rb.x_canonical, obj, 256, b,
                                         GradientMode::grad_of_mean);
  for (std::size_t j = 0; j < g1.size(); ++j) EXPECT_NEAR(g1[j], g2[j], 1e-10);
}

TEST(Gradient, RecoversLinearSimulatorDirection) {
  const std::vector<double> a{1.5, -2.0, 0.5};
  Problem p;
  p.name = "linear";
  p.psi_dim = 3;
  p.x_dim = 2;
  p.M = 16;
  p.N = 1000;
  p.psi0 = {0.3, -0.2, 1.0};
  p.x_canonical = {XDistribution::Family::uniform, {0.0, -1.0}, {1.0, 1.0}};
  p.objective = {sim::ObjectiveSpec::Kind::mean_y};
  p.simulator = std::make_shared<LinearSimulator>(a, std::vector<double>{0.7, -0.4});
  HistoryBuffer buf(3, 2, 1);
  Rng rng(13);
  TrustRegion r{p.psi0, 0.5};
  acquire_data(p, r, p.x_canonical, buf, 0, rng);
  SurrogateEnsemble ens(3, 2, 1, SurrogateConfig{}, {1, 2, 3});
  ens.train(filter_history(buf, r), rng);
  auto g = surrogate_objective_gradient(ens, p.psi0, p.x_canonical,
                                        sim::Objective(p.objective), 512, rng);
  double dot = 0, na = 0, ng = 0;
  for (std::size_t j = 0; j < 3; ++j) {
    dot += a[j] * g[j];
    na += a[j] * a[j];
    ng += g[j] * g[j];
  }
  EXPECT_GE(dot / std::sqrt(na * ng), 0.95);
}

}  // namespace
}  // namespace pgso::surrogate
