#include "pgso/nn/adam.hpp"

#include <cmath>
#include <string>

#include "pgso/errors.hpp"

namespace pgso::nn {

void AdamState::reset() {
  step_ = 0;
  m_.clear();
  v_.clear();
}

void adam_step(std::span<Tensor* const> params, std::span<const Tensor> grads,
               AdamState& state, double lr) {
  if (params.size() != grads.size()) {
    throw DimensionError("adam_step: " + std::to_string(params.size()) +
                         " parameters but " + std::to_string(grads.size()) +
                         " gradients");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i]->shape() != grads[i].shape()) {
      throw DimensionError("adam_step: parameter " + std::to_string(i) +
                           " has shape " + shape_string(params[i]->shape()) +
                           " but gradient has " +
                           shape_string(grads[i].shape()));
    }
    if (!grads[i].all_finite()) {
      throw DivergenceError("adam_step: non-finite gradient for parameter " +
                            std::to_string(i));
    }
  }
  if (state.m_.empty()) {
    for (Tensor* p : params) {
      state.m_.push_back(Tensor::zeros_like(*p));
      state.v_.push_back(Tensor::zeros_like(*p));
    }
  } else if (state.m_.size() != params.size()) {
    throw DimensionError("adam_step: state tracks a different parameter list");
  }

  const AdamHyper& h = state.hyper_;
  state.step_ += 1;
  const double t = static_cast<double>(state.step_);
  const double bias1 = 1.0 - std::pow(h.beta1, t);
  const double bias2 = 1.0 - std::pow(h.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto m = state.m_[i].values();
    auto v = state.v_[i].values();
    auto p = params[i]->values();
    auto g = grads[i].values();
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = h.beta1 * m[j] + (1.0 - h.beta1) * g[j];
      v[j] = h.beta2 * v[j] + (1.0 - h.beta2) * g[j] * g[j];
      const double m_hat = m[j] / bias1;
      const double v_hat = v[j] / bias2;
      p[j] -= lr * m_hat / (std::sqrt(v_hat) + h.epsilon);
    }
  }
}

}  // namespace pgso::nn
