#include "pgso/sim/benchmarks.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "pgso/errors.hpp"
#include "pgso/nn/autodiff.hpp"

namespace pgso::sim {

double three_hump_h(std::span<const double> psi) {
  const double a = psi[0], b = psi[1];
  const double a2 = a * a;
  return 2.0 * a2 - 1.05 * a2 * a2 + a2 * a2 * a2 / 6.0 + a * b + b * b;
}

double three_hump_mixture_weight(std::span<const double> psi) {
  const double norm = std::hypot(psi[0], psi[1]);
  if (norm == 0.0) {
    throw DimensionError("three hump: mixture weight undefined at psi = 0");
  }
  return std::clamp(psi[0] / norm, 0.0, 1.0);
}

Tensor simulate_three_hump(std::span<const double> psi, const Tensor& xs,
                           Rng& rng) {
  if (psi.size() != 2 || xs.cols() != 2) {
    throw DimensionError("three hump needs a 2-d psi and 2-d x rows");
  }
  const double p1 = three_hump_mixture_weight(psi);
  const double h = three_hump_h(psi);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  Tensor ys = Tensor::matrix(xs.rows(), 1);
  for (std::size_t i = 0; i < xs.rows(); ++i) {
    const std::size_t component = unit(rng) < p1 ? 0 : 1;
    const double mu = xs.at(i, component) * h + normal(rng);
    ys[i] = mu + normal(rng);
  }
  return ys;
}

double sigmoid(double x) { return nn::sigmoid(x); }

double hump_objective(std::span<const double> ys) {
  if (ys.empty()) throw DimensionError("hump objective of an empty sample");
  double total = 0;
  for (double y : ys) total += sigmoid(y - 10.0) - sigmoid(y);
  return total / static_cast<double>(ys.size());
}

double rosenbrock_gamma(std::span<const double> psi) {
  double g = 0;
  for (std::size_t i = 0; i + 1 < psi.size(); ++i) {
    const double a = psi[i + 1] - psi[i] * psi[i];
    const double b = psi[i] - 1.0;
    g += a * a + b * b;
  }
  return g;
}

Tensor simulate_rosenbrock(std::span<const double> psi, const Tensor& xs,
                           Rng& rng) {
  if (xs.cols() != 1) throw DimensionError("rosenbrock needs scalar x rows");
  const double gamma = rosenbrock_gamma(psi);
  std::normal_distribution<double> normal(0.0, 1.0);
  Tensor ys = Tensor::matrix(xs.rows(), 1);
  for (std::size_t i = 0; i < xs.rows(); ++i) ys[i] = gamma + xs[i] + normal(rng);
  return ys;
}

SubmanifoldEmbedding SubmanifoldEmbedding::generate(std::uint64_t seed,
                                                    std::size_t psi_dim,
                                                    std::size_t hidden_dim,
                                                    std::size_t out_dim) {
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto orthonormal_rows = [&](std::size_t rows, std::size_t cols) {
    Eigen::MatrixXd g(cols, rows);
    for (Eigen::Index j = 0; j < g.cols(); ++j) {
      for (Eigen::Index i = 0; i < g.rows(); ++i) g(i, j) = normal(rng);
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ() *
                        Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(cols),
                                                  static_cast<Eigen::Index>(rows));
    nn::RowMatrix t = q.transpose();
    return nn::Tensor::from_matrix(t);
  };
  SubmanifoldEmbedding emb;
  emb.seed = seed;
  emb.A = orthonormal_rows(hidden_dim, psi_dim);
  emb.B = orthonormal_rows(out_dim, hidden_dim);
  return emb;
}

std::vector<double> submanifold_embed(std::span<const double> psi,
                                      const SubmanifoldEmbedding& emb) {
  if (psi.size() != emb.A.cols()) {
    throw DimensionError("submanifold embedding expects " +
                         std::to_string(emb.A.cols()) + " parameters");
  }
  Eigen::Map<const Eigen::VectorXd> p(psi.data(), static_cast<Eigen::Index>(psi.size()));
  Eigen::VectorXd hidden = (emb.A.matrix() * p).array().tanh().matrix();
  Eigen::VectorXd out = emb.B.matrix() * hidden;
  return std::vector<double>(out.data(), out.data() + out.size());
}

double muon_objective(std::span<const double> ys, std::span<const double> charges,
                      double alpha1, double alpha2) {
  if (!(alpha1 > 0.0)) throw ConfigError("muon objective needs alpha1 > 0");
  if (ys.size() != charges.size()) {
    throw DimensionError("muon objective: ys and charges differ in length");
  }
  double total = 0;
  for (std::size_t i = 0; i < ys.size(); ++i) {
    if (charges[i] > 0) {
      total += std::sqrt(std::max(0.0, (alpha1 - (ys[i] + alpha2)) / alpha1));
    } else if (charges[i] < 0) {
      total += std::sqrt(std::max(0.0, (alpha1 + (ys[i] - alpha2)) / alpha1));
    }
  }
  return total;
}

Tensor ThreeHumpSimulator::simulate(std::span<const double> psi, const Tensor& xs,
                                    Rng& rng) {
  return simulate_three_hump(psi, xs, rng);
}

Tensor RosenbrockSimulator::simulate(std::span<const double> psi,
                                     const Tensor& xs, Rng& rng) {
  return simulate_rosenbrock(psi, xs, rng);
}

Tensor SubmanifoldHumpSimulator::simulate(std::span<const double> psi,
                                          const Tensor& xs, Rng& rng) {
  const auto embedded = submanifold_embed(psi, embedding_);
  return simulate_three_hump(embedded, xs, rng);
}

namespace {

XDistribution hump_inputs() {
  return {XDistribution::Family::uniform, {-2.0, 0.0}, {2.0, 5.0}};
}

}  // namespace

Problem make_three_hump(XMode mode) {
  Problem p;
  p.kind = ProblemKind::three_hump;
  p.name = "three_hump";
  p.psi_dim = 2;
  p.x_dim = 2;
  p.tau = -0.8;
  p.epsilon_default = 0.5;
  p.psi0 = {2.0, 0.0};
  p.M = 5;
  p.x_mode = mode;
  p.x_canonical = hump_inputs();
  p.objective = {ObjectiveSpec::Kind::hump};
  p.simulator = std::make_shared<ThreeHumpSimulator>();
  return p;
}

Problem make_rosenbrock(XMode mode) {
  Problem p;
  p.kind = ProblemKind::rosenbrock;
  p.name = "rosenbrock";
  p.psi_dim = 10;
  p.x_dim = 1;
  p.tau = 3.0;
  p.epsilon_default = 0.2;
  p.psi0.assign(10, 2.0);
  p.M = 16;
  p.x_mode = mode;
  p.x_canonical = {XDistribution::Family::gaussian_uniform_mean, {-10.0}, {10.0}};
  p.objective = {ObjectiveSpec::Kind::mean_y};
  p.simulator = std::make_shared<RosenbrockSimulator>();
  return p;
}

Problem make_submanifold_hump(XMode mode, SubmanifoldEmbedding embedding) {
  Problem p;
  p.kind = ProblemKind::submanifold_hump;
  p.name = "submanifold_hump";
  p.psi_dim = embedding.A.cols();
  p.x_dim = 2;
  p.tau = -0.8;
  p.epsilon_default = 0.5;
  p.psi0.assign(p.psi_dim, 0.0);
  p.psi0[0] = 2.0;
  p.M = 40;
  // 40 x 1500 = 6.0e4 evaluations per call.
  p.N = 1500;
  p.x_mode = mode;
  p.x_canonical = hump_inputs();
  p.objective = {ObjectiveSpec::Kind::hump};
  p.simulator = std::make_shared<SubmanifoldHumpSimulator>(std::move(embedding));
  return p;
}

Problem make_submanifold_hump(XMode mode, std::uint64_t embedding_seed) {
  return make_submanifold_hump(mode, SubmanifoldEmbedding::generate(embedding_seed));
}

std::pair<double, double> ordered_bounds(double lower, double upper) {
  if (lower > upper) std::swap(lower, upper);
  if (lower == upper) upper = std::nextafter(upper, upper + 1.0);
  return {lower, upper};
}

XDistribution sample_parameterized_bounds(const Problem& problem, Rng& rng) {
  if (problem.x_mode == XMode::fixed) return problem.x_canonical;
  XDistribution d = problem.x_canonical;
  auto draw = [&](std::size_t coord, double lo_mean, double hi_mean, double sd) {
    std::normal_distribution<double> lo(lo_mean, sd), hi(hi_mean, sd);
    const double a = lo(rng);
    const double b = hi(rng);
    std::tie(d.lower[coord], d.upper[coord]) = ordered_bounds(a, b);
  };
  switch (problem.kind) {
    case ProblemKind::three_hump:
    case ProblemKind::submanifold_hump:
      draw(0, -2.0, 2.0, 0.5);
      draw(1, 0.0, 5.0, 1.0);
      break;
    case ProblemKind::rosenbrock:
      draw(0, 0.0, 10.0, 2.0);
      break;
    case ProblemKind::external:
      break;
  }
  return d;
}

double oracle_expected_loss(const Problem& problem, std::span<const double> psi,
                            const XDistribution& xdist, Rng& rng,
                            std::size_t samples) {
  Tensor xs = xdist.sample(samples, rng);
  Tensor ys = problem.simulate(psi, xs, rng);
  return Objective(problem.objective).mean(ys, xs);
}

}  // namespace pgso::sim
