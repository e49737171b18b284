#include "pgso/sim/objective.hpp"

#include <cmath>

#include "pgso/errors.hpp"
#include "pgso/sim/benchmarks.hpp"

namespace pgso::sim {

std::string to_string(ObjectiveSpec::Kind kind) {
  switch (kind) {
    case ObjectiveSpec::Kind::hump:
      return "hump";
    case ObjectiveSpec::Kind::mean_y:
      return "mean_y";
    case ObjectiveSpec::Kind::muon:
      return "muon";
  }
  return "unknown";
}

ObjectiveSpec::Kind objective_kind_from_string(const std::string& s) {
  if (s == "hump") return ObjectiveSpec::Kind::hump;
  if (s == "mean_y") return ObjectiveSpec::Kind::mean_y;
  if (s == "muon") return ObjectiveSpec::Kind::muon;
  throw ConfigError("unknown objective '" + s + "'");
}

Objective::Objective(ObjectiveSpec spec) : spec_(spec) {
  if (spec_.kind == ObjectiveSpec::Kind::muon && !(spec_.alpha1 > 0.0)) {
    throw ConfigError("muon objective needs alpha1 > 0");
  }
}

namespace {

double muon_term(double y, double charge, double a1, double a2) {
  if (charge > 0) return std::sqrt(std::max(0.0, (a1 - (y + a2)) / a1));
  if (charge < 0) return std::sqrt(std::max(0.0, (a1 + (y - a2)) / a1));
  return 0.0;
}

}  // namespace

double Objective::per_sample(std::span<const double> y,
                             std::span<const double> x) const {
  switch (spec_.kind) {
    case ObjectiveSpec::Kind::hump:
      return sigmoid(y[0] - 10.0) - sigmoid(y[0]);
    case ObjectiveSpec::Kind::mean_y: {
      double s = 0;
      for (double v : y) s += v;
      return s / static_cast<double>(y.size());
    }
    case ObjectiveSpec::Kind::muon:
      if (spec_.charge_column >= x.size()) {
        throw DimensionError("muon objective: charge column out of range");
      }
      return muon_term(y[0], x[spec_.charge_column], spec_.alpha1, spec_.alpha2);
  }
  return 0.0;
}

double Objective::mean(const nn::Tensor& ys, const nn::Tensor& xs) const {
  if (ys.rows() == 0) throw DimensionError("objective of an empty sample");
  double total = 0;
  for (std::size_t i = 0; i < ys.rows(); ++i) {
    total += per_sample(ys.row(i), xs.row(i));
  }
  return total / static_cast<double>(ys.rows());
}

nn::Var Objective::on_tape(nn::Var ys, const nn::Tensor& xs) const {
  using namespace nn;
  Tape& tape = *ys.tape();
  const std::size_t n = ys.value().rows();
  switch (spec_.kind) {
    case ObjectiveSpec::Kind::hump: {
      Var y = column(ys, 0);
      return sigmoid(y - 10.0) - sigmoid(y);
    }
    case ObjectiveSpec::Kind::mean_y: {
      const std::size_t c = ys.value().cols();
      if (c == 1) return ys;
      Var avg = tape.variable(Tensor::matrix(c, 1, std::vector<double>(c, 1.0 / c)));
      return matmul(ys, avg);
    }
    case ObjectiveSpec::Kind::muon: {
      Tensor pos = Tensor::matrix(n, 1), neg = Tensor::matrix(n, 1);
      for (std::size_t i = 0; i < n; ++i) {
        const double q = xs.at(i, spec_.charge_column);
        pos[i] = q > 0 ? 1.0 : 0.0;
        neg[i] = q < 0 ? 1.0 : 0.0;
      }
      const double a1 = spec_.alpha1, a2 = spec_.alpha2;
      Var y = column(ys, 0);
      Var r_pos = scale(add_scalar(nn::neg(y), a1 - a2), 1.0 / a1);
      Var r_neg = scale(add_scalar(y, a1 - a2), 1.0 / a1);
      return tape.variable(pos) * sqrt(clamp_min(r_pos, 0.0)) +
             tape.variable(neg) * sqrt(clamp_min(r_neg, 0.0));
    }
  }
  throw std::logic_error("unhandled objective kind");
}

}  // namespace pgso::sim
