#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pgso/nn/tensor.hpp"

namespace pgso::nn {

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Moment accumulators for one parameter list. Shapes are fixed on the
/// first step.
class AdamState {
 public:
  AdamState() = default;
  explicit AdamState(AdamHyper hyper) : hyper_(hyper) {}

  std::int64_t step() const { return step_; }
  const AdamHyper& hyper() const { return hyper_; }
  const std::vector<Tensor>& first_moment() const { return m_; }
  const std::vector<Tensor>& second_moment() const { return v_; }
  void reset();

 private:
  friend void adam_step(std::span<Tensor* const> params,
                        std::span<const Tensor> grads, AdamState& state,
                        double lr);

  AdamHyper hyper_;
  std::int64_t step_ = 0;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
};

/// One bias-corrected Adam update. Throws DivergenceError before touching
/// anything if a gradient entry is non-finite.
void adam_step(std::span<Tensor* const> params, std::span<const Tensor> grads,
               AdamState& state, double lr);

}  // namespace pgso::nn
