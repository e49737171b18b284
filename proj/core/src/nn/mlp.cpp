#include "pgso/nn/mlp.hpp"

#include <cmath>
#include <random>
#include <string>

#include "pgso/errors.hpp"

namespace pgso::nn {

Mlp::Mlp(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    const DenseLayer& layer = layers_[k];
    if (layer.weight.rank() != 2 || layer.bias.size() != layer.weight.cols()) {
      throw DimensionError("layer " + std::to_string(k) + ": weight " +
                           shape_string(layer.weight.shape()) + ", bias " +
                           shape_string(layer.bias.shape()));
    }
    if (k > 0 && layers_[k - 1].weight.cols() != layer.weight.rows()) {
      throw DimensionError("layer " + std::to_string(k) + " expects " +
                           std::to_string(layer.weight.rows()) +
                           " inputs but the previous layer produces " +
                           std::to_string(layers_[k - 1].weight.cols()));
    }
  }
}

Mlp Mlp::glorot(std::span<const std::size_t> sizes, std::uint64_t seed) {
  if (sizes.size() < 2) throw DimensionError("an MLP needs at least 2 widths");
  std::mt19937_64 rng(seed);
  std::vector<DenseLayer> layers;
  for (std::size_t k = 0; k + 1 < sizes.size(); ++k) {
    const std::size_t fan_in = sizes[k];
    const std::size_t fan_out = sizes[k + 1];
    const double limit =
        std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> uniform(-limit, limit);
    Tensor w = Tensor::matrix(fan_in, fan_out);
    for (double& v : w.values()) v = uniform(rng);
    layers.push_back({std::move(w), Tensor::vector(std::vector<double>(fan_out, 0.0))});
  }
  return Mlp(std::move(layers));
}

std::size_t Mlp::input_dim() const {
  return layers_.empty() ? 0 : layers_.front().weight.rows();
}

std::size_t Mlp::output_dim() const {
  return layers_.empty() ? 0 : layers_.back().weight.cols();
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.weight.size() + l.bias.size();
  return n;
}

std::vector<Tensor*> Mlp::parameters() {
  std::vector<Tensor*> out;
  for (auto& l : layers_) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  return out;
}

std::vector<const Tensor*> Mlp::parameters() const {
  std::vector<const Tensor*> out;
  for (const auto& l : layers_) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  return out;
}

void check_input_dim(const Mlp& mlp, const Tensor& input) {
  if (input.cols() != mlp.input_dim()) {
    throw DimensionError("MLP expects last dimension " +
                         std::to_string(mlp.input_dim()) +
                         ", got input of shape " +
                         shape_string(input.shape()));
  }
}

Tensor Mlp::forward(const Tensor& input) const {
  check_input_dim(*this, input);
  RowMatrix h = input.matrix();
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    RowMatrix next = h * layers_[k].weight.matrix();
    next.rowwise() += layers_[k].bias.matrix().row(0);
    if (k + 1 < layers_.size()) next = next.cwiseMax(0.0);
    h = std::move(next);
  }
  Tensor out = Tensor::from_matrix(h);
  if (input.rank() < 2) {
    return Tensor::vector(out.to_vector());
  }
  return out;
}

bool Mlp::operator==(const Mlp& other) const {
  if (layers_.size() != other.layers_.size()) return false;
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    if (!(layers_[k].weight == other.layers_[k].weight) ||
        !(layers_[k].bias == other.layers_[k].bias)) {
      return false;
    }
  }
  return true;
}

BoundMlp::BoundMlp(Tape& tape, const Mlp& mlp) : mlp_(&mlp) {
  for (const Tensor* p : mlp.parameters()) params_.push_back(tape.variable(*p));
}

Var BoundMlp::forward(Var input) const {
  check_input_dim(*mlp_, input.value());
  Var h = input;
  const std::size_t n = mlp_->layer_count();
  for (std::size_t k = 0; k < n; ++k) {
    h = add_row(matmul(h, params_[2 * k]), params_[2 * k + 1]);
    if (k + 1 < n) h = relu(h);
  }
  return h;
}

Tensor mlp_forward(const Mlp& mlp, const Tensor& input) {
  return mlp.forward(input);
}

}  // namespace pgso::nn
