#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "pgso/nn/autodiff.hpp"
#include "pgso/nn/tensor.hpp"

namespace pgso::nn {

/// Affine layer; `weight` is (in x out) so a batch maps as X * W + b.
struct DenseLayer {
  Tensor weight;
  Tensor bias;
};

/// Multi-layer perceptron: ReLU on hidden layers, identity on the output.
class Mlp {
 public:
  Mlp() = default;
  explicit Mlp(std::vector<DenseLayer> layers);

  /// Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases.
  /// `sizes` lists every width including input and output.
  static Mlp glorot(std::span<const std::size_t> sizes, std::uint64_t seed);
  static Mlp glorot(std::initializer_list<std::size_t> sizes,
                    std::uint64_t seed) {
    return glorot(std::span<const std::size_t>(sizes.begin(), sizes.size()),
                  seed);
  }

  std::size_t input_dim() const;
  std::size_t output_dim() const;
  std::size_t layer_count() const { return layers_.size(); }
  std::size_t parameter_count() const;

  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& layers() { return layers_; }

  /// Parameter tensors in the fixed order w0, b0, w1, b1, ...
  std::vector<Tensor*> parameters();
  std::vector<const Tensor*> parameters() const;

  /// Untraced evaluation. Rank-1 input gives rank-1 output.
  Tensor forward(const Tensor& input) const;

  bool operator==(const Mlp& other) const;

 private:
  std::vector<DenseLayer> layers_;
};

/// The network's parameters registered as leaves on a tape.
class BoundMlp {
 public:
  BoundMlp(Tape& tape, const Mlp& mlp);

  /// Traced forward pass over a (batch x in) input.
  Var forward(Var input) const;

  /// Leaves in the same order as Mlp::parameters().
  const std::vector<Var>& parameters() const { return params_; }

 private:
  const Mlp* mlp_;
  std::vector<Var> params_;
};

Tensor mlp_forward(const Mlp& mlp, const Tensor& input);

void check_input_dim(const Mlp& mlp, const Tensor& input);

}  // namespace pgso::nn
