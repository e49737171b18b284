#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "pgso/errors.hpp"
#include "pgso/sim/benchmarks.hpp"
#include "pgso/sim/objective.hpp"
#include "pgso/sim/problem.hpp"
#include "test_support.hpp"

namespace pgso::sim {
namespace {

double sample_mean(const Tensor& t) {
  return std::accumulate(t.values().begin(), t.values().end(), 0.0) /
         static_cast<double>(t.size());
}

double plain_sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

TEST(ThreeHump, PolynomialValues) {
  EXPECT_EQ(three_hump_h(std::vector<double>{0, 0}), 0.0);
  EXPECT_NEAR(three_hump_h(std::vector<double>{1, 0}), 2 - 1.05 + 1.0 / 6, 1e-12);
  EXPECT_NEAR(three_hump_h(std::vector<double>{1, 0}), 1.1166667, 1e-7);
  EXPECT_NEAR(three_hump_h(std::vector<double>{2, 0}), 1.8666667, 1e-7);
  EXPECT_NEAR(three_hump_h(std::vector<double>{0.5, -1.5}),
              2 * 0.25 - 1.05 * 0.0625 + std::pow(0.5, 6) / 6 - 0.75 + 2.25, 1e-12);
}

TEST(ThreeHump, MixtureWeight) {
  EXPECT_EQ(three_hump_mixture_weight(std::vector<double>{1, 0}), 1.0);
  EXPECT_NEAR(three_hump_mixture_weight(std::vector<double>{1e-12, 3}), 0.0, 1e-11);
  EXPECT_EQ(three_hump_mixture_weight(std::vector<double>{-1, 1}), 0.0);
  EXPECT_NEAR(three_hump_mixture_weight(std::vector<double>{3, 4}), 0.6, 1e-15);
  EXPECT_THROW(three_hump_mixture_weight(std::vector<double>{0, 0}), DimensionError);
}

TEST(ThreeHump, MonteCarloMeanWithFixedInput) {
  const std::size_t n = 100000;
  Tensor xs = Tensor::matrix(n, 2);
  for (std::size_t i = 0; i < n; ++i) {
    xs.at(i, 0) = 1.0;
    xs.at(i, 1) = 4.0;  // never selected at psi = [1, 0]
  }
  Rng rng(11);
  Tensor ys = simulate_three_hump(std::vector<double>{1, 0}, xs, rng);
  const double se = std::sqrt(2.0 / n);
  EXPECT_NEAR(sample_mean(ys), 1.1166667, 3 * se);
}

TEST(ThreeHump, SecondComponentWhenFirstCoordinateVanishes) {
  const std::size_t n = 20000;
  Tensor xs = Tensor::matrix(n, 2);
  for (std::size_t i = 0; i < n; ++i) {
    xs.at(i, 0) = 100.0;
    xs.at(i, 1) = 1.0;
  }
  Rng rng(12);
  const std::vector<double> psi{0.0, 1.0};
  Tensor ys = simulate_three_hump(psi, xs, rng);
  EXPECT_NEAR(sample_mean(ys), three_hump_h(psi), 3 * std::sqrt(2.0 / n));
}

TEST(ThreeHump, SameSeedIsBitIdentical) {
  Rng xr(3);
  Tensor xs = make_three_hump().x_canonical.sample(500, xr);
  Rng a(99), b(99);
  EXPECT_EQ(simulate_three_hump(std::vector<double>{2, 0}, xs, a),
            simulate_three_hump(std::vector<double>{2, 0}, xs, b));
}

TEST(HumpObjective, Values) {
  EXPECT_NEAR(hump_objective(std::vector<double>{-1e6}), 0.0, 1e-15);
  EXPECT_NEAR(hump_objective(std::vector<double>{1e6}), 0.0, 1e-15);
  EXPECT_NEAR(hump_objective(std::vector<double>{5.0}), -0.9866143, 1e-7);
  EXPECT_NEAR(hump_objective(std::vector<double>{5.0}),
              plain_sigmoid(-5) - plain_sigmoid(5), 1e-15);
  EXPECT_THROW(hump_objective(std::vector<double>{}), DimensionError);
}

TEST(HumpObjective, BoundedOnRandomSamples) {
  Rng rng(5);
  std::normal_distribution<double> wide(5.0, 20.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> ys(10);
    for (double& y : ys) y = wide(rng);
    const double v = hump_objective(ys);
    EXPECT_GT(v, -1.0);
    EXPECT_LE(v, 1e-12);
  }
}

TEST(Rosenbrock, GammaValues) {
  EXPECT_EQ(rosenbrock_gamma(std::vector<double>(10, 1.0)), 0.0);
  EXPECT_EQ(rosenbrock_gamma(std::vector<double>(10, 2.0)), 45.0);
}

TEST(Rosenbrock, MonteCarloMean) {
  const std::size_t n = 100000;
  Rng rng(21);
  std::normal_distribution<double> x_given_mu(0.0, 1.0);
  Tensor xs = Tensor::matrix(n, 1);
  for (std::size_t i = 0; i < n; ++i) xs[i] = x_given_mu(rng);
  Tensor ys = simulate_rosenbrock(std::vector<double>(10, 1.0), xs, rng);
  // Var(y) = Var(x) + 1 = 2.
  EXPECT_NEAR(sample_mean(ys), 0.0, 3 * std::sqrt(2.0 / n));
}

TEST(Rosenbrock, InputFamilyHasUniformMean) {
  Problem p = make_rosenbrock();
  Rng rng(4);
  const std::size_t n = 100000;
  Tensor xs = p.x_canonical.sample(n, rng);
  // x = mu + e with mu ~ U[-10, 10]: Var = 400/12 + 1.
  EXPECT_NEAR(sample_mean(xs), 0.0, 3 * std::sqrt((400.0 / 12 + 1) / n));
}

TEST(Submanifold, OrthonormalRows) {
  for (std::uint64_t seed : {1u, 2u, 77u}) {
    auto emb = SubmanifoldEmbedding::generate(seed);
    ASSERT_EQ(emb.A.rows(), 16u);
    ASSERT_EQ(emb.A.cols(), 40u);
    ASSERT_EQ(emb.B.rows(), 2u);
    ASSERT_EQ(emb.B.cols(), 16u);
    nn::RowMatrix aat = emb.A.matrix() * emb.A.matrix().transpose();
    nn::RowMatrix bbt = emb.B.matrix() * emb.B.matrix().transpose();
    EXPECT_LT((aat - nn::RowMatrix::Identity(16, 16)).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT((bbt - nn::RowMatrix::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(Submanifold, EmbeddingMatchesLoopOracle) {
  auto emb = SubmanifoldEmbedding::generate(8);
  EXPECT_EQ(submanifold_embed(std::vector<double>(40, 0.0), emb),
            (std::vector<double>{0.0, 0.0}));
  Rng rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    auto psi = testing::random_vector(40, rng, -2, 2);
    std::vector<double> hidden(16);
    for (std::size_t i = 0; i < 16; ++i) {
      double acc = 0;
      for (std::size_t j = 0; j < 40; ++j) acc += emb.A.at(i, j) * psi[j];
      hidden[i] = std::tanh(acc);
    }
    auto got = submanifold_embed(psi, emb);
    for (std::size_t k = 0; k < 2; ++k) {
      double acc = 0;
      for (std::size_t i = 0; i < 16; ++i) acc += emb.B.at(k, i) * hidden[i];
      EXPECT_LE(testing::relative_error(got[k], acc, 1e-300), 1e-12);
    }
  }
}

TEST(Submanifold, ReducesToThreeHumpAtEmbeddedPoint) {
  Problem p = make_submanifold_hump(XMode::fixed, 31);
  const auto& sim = dynamic_cast<const SubmanifoldHumpSimulator&>(*p.simulator);
  // For small targets the embedding is close to the linear map B A, so the
  // minimum-norm preimage under B A lands near the target.
  const std::vector<double> target{0.02, 0.01};
  nn::RowMatrix ba = sim.embedding().B.matrix() * sim.embedding().A.matrix();
  Eigen::VectorXd psi_vec =
      ba.completeOrthogonalDecomposition().solve(Eigen::Vector2d(target[0], target[1]));
  std::vector<double> psi(psi_vec.data(), psi_vec.data() + psi_vec.size());
  auto embedded = submanifold_embed(psi, sim.embedding());
  EXPECT_NEAR(embedded[0], target[0], 1e-5);
  EXPECT_NEAR(embedded[1], target[1], 1e-5);

  Rng xr(1);
  Tensor xs = p.x_canonical.sample(1000, xr);
  Rng a(5), b(5);
  EXPECT_EQ(p.simulate(psi, xs, a), simulate_three_hump(embedded, xs, b));
}

TEST(Problems, ConstantsMatchBenchmarkDefinitions) {
  Problem hump = make_three_hump();
  EXPECT_EQ(hump.psi_dim, 2u);
  EXPECT_EQ(hump.tau, -0.8);
  EXPECT_EQ(hump.epsilon_default, 0.5);
  EXPECT_EQ(hump.psi0, (std::vector<double>{2.0, 0.0}));
  EXPECT_EQ(hump.M, 5u);
  EXPECT_EQ(hump.N, 3000u);
  EXPECT_EQ(hump.x_canonical.lower, (std::vector<double>{-2.0, 0.0}));
  EXPECT_EQ(hump.x_canonical.upper, (std::vector<double>{2.0, 5.0}));

  Problem rb = make_rosenbrock();
  EXPECT_EQ(rb.psi_dim, 10u);
  EXPECT_EQ(rb.tau, 3.0);
  EXPECT_EQ(rb.epsilon_default, 0.2);
  EXPECT_EQ(rb.psi0, std::vector<double>(10, 2.0));
  EXPECT_EQ(rb.M, 16u);

  Problem sub = make_submanifold_hump(XMode::fixed, 3);
  EXPECT_EQ(sub.psi_dim, 40u);
  EXPECT_EQ(sub.tau, -0.8);
  EXPECT_EQ(sub.epsilon_default, 0.5);
  EXPECT_EQ(sub.M, 40u);
  EXPECT_EQ(sub.M * sub.N, 60000u);
  EXPECT_EQ(sub.psi0[0], 2.0);
  for (std::size_t i = 1; i < 40; ++i) EXPECT_EQ(sub.psi0[i], 0.0);
}

TEST(Problems, SimulateRejectsWrongShapes) {
  Problem hump = make_three_hump();
  Rng rng(1);
  EXPECT_THROW(hump.simulate(std::vector<double>{1, 0, 0}, Tensor::matrix(3, 2), rng),
               DimensionError);
  EXPECT_THROW(hump.simulate(std::vector<double>{1, 0}, Tensor::matrix(3, 1), rng),
               DimensionError);
}

TEST(Bounds, FixedModePassesThrough) {
  Problem hump = make_three_hump(XMode::fixed);
  Rng rng(1);
  EXPECT_EQ(sample_parameterized_bounds(hump, rng), hump.x_canonical);
}

TEST(Bounds, LowerBoundMean) {
  Problem hump = make_three_hump(XMode::parameterized);
  Rng rng(17);
  const int n = 10000;
  double total = 0;
  for (int i = 0; i < n; ++i) {
    auto d = sample_parameterized_bounds(hump, rng);
    d.validate();
    total += d.lower[0];
  }
  EXPECT_NEAR(total / n, -2.0, 3 * 0.5 / 100);
}

TEST(Bounds, InvertedDrawsAreSwapped) {
  // Rosenbrock bounds come from N(0, 2) and N(10, 2); inversions are rare
  // but with 10^5 draws a handful occur. Every result must stay ordered.
  Problem rb = make_rosenbrock(XMode::parameterized);
  Rng rng(23);
  for (int i = 0; i < 100000; ++i) {
    auto d = sample_parameterized_bounds(rb, rng);
    ASSERT_LT(d.lower[0], d.upper[0]);
  }
  EXPECT_EQ(ordered_bounds(3.0, 2.5), std::make_pair(2.5, 3.0));
  EXPECT_EQ(ordered_bounds(-1.0, 4.0), std::make_pair(-1.0, 4.0));
  XDistribution d{XDistribution::Family::uniform, {3.0}, {2.5}};
  EXPECT_THROW(d.validate(), ConfigError);
}

TEST(Oracle, RosenbrockAtMinimum) {
  Problem rb = make_rosenbrock();
  Rng rng(3);
  const double v = oracle_expected_loss(rb, std::vector<double>(10, 1.0),
                                        rb.x_canonical, rng, 10000);
  EXPECT_NEAR(v, 0.0, 3 * std::sqrt((400.0 / 12 + 2) / 10000));
}

TEST(Oracle, ThreeHumpTerminalRegion) {
  Problem hump = make_three_hump();
  Rng rng(3);
  // psi = [-1, -0.25]: component 2 always and h ~ 1.43, so y ~ 1.43 x2
  // with x2 ~ U[0, 5] mostly lands between the sigmoid transitions.
  const double v =
      oracle_expected_loss(hump, std::vector<double>{-1.0, -0.25}, hump.x_canonical, rng);
  EXPECT_LE(v, -0.8);
  const double start =
      oracle_expected_loss(hump, hump.psi0, hump.x_canonical, rng);
  EXPECT_GT(start, -0.8);
}

TEST(Oracle, DeterministicGivenSeed) {
  Problem hump = make_three_hump();
  Rng a(8), b(8);
  EXPECT_EQ(oracle_expected_loss(hump, hump.psi0, hump.x_canonical, a),
            oracle_expected_loss(hump, hump.psi0, hump.x_canonical, b));
}

TEST(Muon, TermValues) {
  const double a1 = 2.0, a2 = 0.5;
  EXPECT_EQ(muon_objective(std::vector<double>{a1 - a2}, std::vector<double>{1}, a1, a2), 0.0);
  EXPECT_EQ(muon_objective(std::vector<double>{-a2}, std::vector<double>{1}, a1, a2), 1.0);
  EXPECT_EQ(muon_objective(std::vector<double>{-a2, a2}, std::vector<double>{1, -1}, a1, a2),
            2.0);
  EXPECT_EQ(muon_objective(std::vector<double>{50.0}, std::vector<double>{1}, a1, a2), 0.0);
  EXPECT_THROW(muon_objective(std::vector<double>{0}, std::vector<double>{1}, 0.0, a2),
               ConfigError);
}

TEST(Muon, NonNegativeOnRandomBatches) {
  Rng rng(2);
  std::normal_distribution<double> y(0.0, 3.0);
  std::bernoulli_distribution q(0.5);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> ys(20), qs(20);
    for (std::size_t i = 0; i < 20; ++i) {
      ys[i] = y(rng);
      qs[i] = q(rng) ? 1.0 : -1.0;
    }
    EXPECT_GE(muon_objective(ys, qs, 1.5, 0.3), 0.0);
  }
}

TEST(ObjectiveSpec, EagerAndTapedAgree) {
  Rng rng(6);
  const std::size_t n = 64;
  Tensor ys = Tensor::matrix(n, 1);
  Tensor xs = Tensor::matrix(n, 2);
  std::normal_distribution<double> g(2.0, 4.0);
  for (std::size_t i = 0; i < n; ++i) {
    ys[i] = g(rng);
    xs.at(i, 0) = (i % 2 == 0) ? 1.0 : -1.0;
    xs.at(i, 1) = g(rng);
  }
  for (auto kind : {ObjectiveSpec::Kind::hump, ObjectiveSpec::Kind::mean_y,
                    ObjectiveSpec::Kind::muon}) {
    Objective obj({kind, 6.0, 1.0, 0});
    nn::Tape tape;
    nn::Var per = obj.on_tape(tape.variable(ys), xs);
    const Tensor& values = per.value();
    ASSERT_EQ(values.rows(), n);
    double total = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double expect = obj.per_sample(ys.row(i), xs.row(i));
      EXPECT_NEAR(values[i], expect, 1e-12);
      total += expect;
    }
    EXPECT_NEAR(obj.mean(ys, xs), total / n, 1e-12);
  }
  Objective muon({ObjectiveSpec::Kind::muon, 6.0, 1.0, 0});
  EXPECT_NEAR(muon.per_sample(std::vector<double>{-1.0}, std::vector<double>{1.0, 0.0}),
              1.0, 1e-15);
}

TEST(ObjectiveSpec, HumpOnRealSamplesMatchesScalarHelper) {
  Problem hump = make_three_hump();
  Rng rng(1);
  Tensor xs = hump.x_canonical.sample(200, rng);
  Tensor ys = hump.simulate(hump.psi0, xs, rng);
  EXPECT_NEAR(Objective(hump.objective).mean(ys, xs), hump_objective(ys.values()), 1e-14);
}

}  // namespace
}  // namespace pgso::sim
