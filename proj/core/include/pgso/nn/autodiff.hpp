#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <span>
#include <vector>

#include "pgso/nn/tensor.hpp"

namespace pgso::nn {

class Tape;

/// Handle to a value recorded on a Tape.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  Tape* tape() const { return tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Reverse-mode gradient tape.
///
/// Nodes are appended in evaluation order, so reverse insertion order is a
/// valid topological order for the backward sweep. A tape belongs to one
/// forward computation and one thread; build a new one per step.
class Tape {
 public:
  /// Receives the upstream gradient of the node and adds into its parents.
  using Pullback = std::function<void(const Tensor& upstream, Tape& tape)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Records a leaf (parameter, input or constant).
  Var variable(Tensor value);

  /// Records the result of an op together with its pullback.
  Var record(Tensor value, Pullback pullback);

  const Tensor& value(Var v) const;
  std::size_t size() const { return nodes_.size(); }

  /// Adds `delta` into the gradient accumulator of `target`.
  void accumulate(Var target, const Eigen::Ref<const RowMatrix>& delta);
  void accumulate(Var target, std::span<const double> delta);

  /// Runs the backward sweep from a single-element output and returns the
  /// gradient of every `wrt` variable; variables off every path get zeros.
  /// The gradient slot of each `wrt` node value is filled as well.
  std::vector<Tensor> backward(Var output, std::span<const Var> wrt);
  std::vector<Tensor> backward(Var output, std::initializer_list<Var> wrt) {
    return backward(output, std::span<const Var>(wrt.begin(), wrt.size()));
  }

 private:
  struct Node {
    Tensor value;
    Pullback pullback;
    Tensor grad;
    bool has_grad = false;
  };

  Node& node(Var v);
  void check_owned(Var v) const;

  std::deque<Node> nodes_;
};

// Elementwise and linear-algebra ops. Binary elementwise ops require equal
// shapes; broadcasting is explicit (add_row, repeat_rows).
Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);
Var add_row(Var m, Var row);
Var scale(Var a, double factor);
Var add_scalar(Var a, double offset);
Var neg(Var a);
Var relu(Var a);
Var tanh(Var a);
Var sigmoid(Var a);
Var softplus(Var a);
Var exp(Var a);
Var log(Var a);
Var square(Var a);
/// Square root; the derivative at exactly 0 is taken as 0.
Var sqrt(Var a);
Var clamp_min(Var a, double floor);
Var sum(Var a);
Var mean(Var a);
/// Mean over rows: r x c -> 1 x c.
Var mean_rows(Var a);
Var concat_cols(std::span<const Var> parts);
Var concat_cols(std::initializer_list<Var> parts);
Var repeat_rows(Var row, std::size_t n);
Var column(Var a, std::size_t j);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }
inline Var operator/(Var a, Var b) { return div(a, b); }
inline Var operator-(Var a) { return neg(a); }
inline Var operator*(Var a, double c) { return scale(a, c); }
inline Var operator*(double c, Var a) { return scale(a, c); }
inline Var operator+(Var a, double c) { return add_scalar(a, c); }
inline Var operator-(Var a, double c) { return add_scalar(a, -c); }

/// Numerically stable log(1 + exp(x)).
double softplus(double x);
double sigmoid(double x);

}  // namespace pgso::nn
