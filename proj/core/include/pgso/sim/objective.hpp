#pragma once

#include <cstddef>
#include <string>

#include "pgso/nn/autodiff.hpp"
#include "pgso/nn/tensor.hpp"

namespace pgso::sim {

/// Which per-sample loss L(y) a problem minimizes in expectation.
struct ObjectiveSpec {
  enum class Kind {
    /// sigmoid(y - 10) - sigmoid(y)
    hump,
    /// y (averaged over output coordinates)
    mean_y,
    /// sensitive-region distance with charge sign read from an x column
    muon,
  };

  Kind kind = Kind::hump;
  double alpha1 = 1.0;
  double alpha2 = 0.0;
  std::size_t charge_column = 0;

  bool operator==(const ObjectiveSpec&) const = default;
};

std::string to_string(ObjectiveSpec::Kind kind);
ObjectiveSpec::Kind objective_kind_from_string(const std::string& s);

/// Evaluates L eagerly on simulator output and symbolically on surrogate
/// output. `xs` supplies the charge column for the muon loss.
class Objective {
 public:
  explicit Objective(ObjectiveSpec spec);

  const ObjectiveSpec& spec() const { return spec_; }
  bool is_linear() const { return spec_.kind == ObjectiveSpec::Kind::mean_y; }

  double per_sample(std::span<const double> y, std::span<const double> x) const;
  /// Mean of per-sample losses over the rows of ys.
  double mean(const nn::Tensor& ys, const nn::Tensor& xs) const;
  /// n x 1 per-sample losses on a tape.
  nn::Var on_tape(nn::Var ys, const nn::Tensor& xs) const;

 private:
  ObjectiveSpec spec_;
};

}  // namespace pgso::sim
