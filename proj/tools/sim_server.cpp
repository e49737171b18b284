// Serves a simulator over the line protocol on stdin/stdout.
//
//   pgso_sim_server --problem echo
//   pgso_sim_server --problem three_hump --seed 7

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "pgso/errors.hpp"
#include "pgso/sim/benchmarks.hpp"
#include "pgso/sim/external.hpp"

int main(int argc, char** argv) {
  CLI::App app{"pgso simulator server"};
  std::string problem = "echo";
  std::uint64_t seed = 0;
  std::uint64_t embedding_seed = 0;
  app.add_option("--problem", problem,
                 "echo | three_hump | rosenbrock | submanifold_hump")
      ->capture_default_str();
  app.add_option("--seed", seed, "seed of the simulator noise stream")
      ->capture_default_str();
  app.add_option("--embedding-seed", embedding_seed,
                 "embedding seed for submanifold_hump")
      ->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  std::ios::sync_with_stdio(false);
  pgso::Rng rng(seed);
  pgso::sim::protocol::Handler handler;
  if (problem == "echo") {
    handler = [](const pgso::sim::protocol::Request& req) {
      if (req.xs.cols() == 0) throw pgso::DimensionError("echo needs non-empty x rows");
      pgso::nn::Tensor ys = pgso::nn::Tensor::matrix(req.xs.rows(), 1);
      for (std::size_t i = 0; i < req.xs.rows(); ++i) ys[i] = req.xs.at(i, 0);
      return ys;
    };
  } else {
    pgso::sim::Problem p;
    try {
      const auto kind = pgso::sim::problem_kind_from_string(problem);
      if (kind == pgso::sim::ProblemKind::three_hump) {
        p = pgso::sim::make_three_hump();
      } else if (kind == pgso::sim::ProblemKind::rosenbrock) {
        p = pgso::sim::make_rosenbrock();
      } else if (kind == pgso::sim::ProblemKind::submanifold_hump) {
        p = pgso::sim::make_submanifold_hump(pgso::sim::XMode::fixed, embedding_seed);
      } else {
        throw pgso::ConfigError("cannot serve problem '" + problem + "'");
      }
    } catch (const std::exception& e) {
      std::cerr << e.what() << '\n';
      return 2;
    }
    handler = [p, &rng](const pgso::sim::protocol::Request& req) {
      return p.simulate(req.psi, req.xs, rng);
    };
  }
  pgso::sim::protocol::serve(std::cin, std::cout, handler);
  return 0;
}
