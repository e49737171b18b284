#include "pgso/nn/autodiff.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "pgso/errors.hpp"

namespace pgso::nn {

const Tensor& Var::value() const {
  if (!tape_) throw std::logic_error("value() on an unbound Var");
  return tape_->value(*this);
}

Var Tape::variable(Tensor value) {
  nodes_.push_back(Node{std::move(value), nullptr, Tensor(), false});
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Tensor value, Pullback pullback) {
  nodes_.push_back(Node{std::move(value), std::move(pullback), Tensor(), false});
  return Var(this, nodes_.size() - 1);
}

void Tape::check_owned(Var v) const {
  if (v.tape_ != this || v.id_ >= nodes_.size()) {
    throw std::logic_error("Var does not belong to this tape");
  }
}

Tape::Node& Tape::node(Var v) {
  check_owned(v);
  return nodes_[v.id_];
}

const Tensor& Tape::value(Var v) const {
  check_owned(v);
  return nodes_[v.id_].value;
}

void Tape::accumulate(Var target, const Eigen::Ref<const RowMatrix>& delta) {
  Node& n = node(target);
  if (!n.has_grad) {
    n.grad = Tensor::zeros_like(n.value);
    n.has_grad = true;
  }
  n.grad.matrix() += delta;
}

void Tape::accumulate(Var target, std::span<const double> delta) {
  Node& n = node(target);
  if (delta.size() != n.value.size()) {
    throw DimensionError("gradient accumulation size mismatch");
  }
  if (!n.has_grad) {
    n.grad = Tensor::zeros_like(n.value);
    n.has_grad = true;
  }
  auto g = n.grad.values();
  for (std::size_t i = 0; i < delta.size(); ++i) g[i] += delta[i];
}

std::vector<Tensor> Tape::backward(Var output, std::span<const Var> wrt) {
  check_owned(output);
  const Tensor& out_value = nodes_[output.id_].value;
  if (out_value.size() != 1) {
    throw DimensionError("backward() needs a scalar output, got shape " +
                         shape_string(out_value.shape()));
  }
  for (Node& n : nodes_) {
    n.has_grad = false;
    n.grad = Tensor();
  }
  {
    Node& out = nodes_[output.id_];
    out.grad = Tensor(out.value.shape(), {1.0});
    out.has_grad = true;
  }
  for (std::size_t i = output.id_ + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.has_grad || !n.pullback) continue;
    n.pullback(n.grad, *this);
  }
  std::vector<Tensor> grads;
  grads.reserve(wrt.size());
  for (Var v : wrt) {
    Node& n = node(v);
    Tensor g = n.has_grad ? n.grad : Tensor::zeros_like(n.value);
    n.value.set_grad(g.to_vector());
    grads.push_back(std::move(g));
  }
  return grads;
}

namespace {

Tape& tape_of(Var a) {
  if (!a.valid()) throw std::logic_error("op on an unbound Var");
  return *a.tape();
}

Tape& tape_of(Var a, Var b) {
  if (a.tape() != b.tape()) throw std::logic_error("Vars from different tapes");
  return tape_of(a);
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " +
                         shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
  }
}

// Unary elementwise op with derivative expressed through input x and output y.
template <class Fwd, class Deriv>
Var unary(Var a, Fwd fwd, Deriv deriv) {
  Tape& tape = tape_of(a);
  const Tensor& x = a.value();
  Tensor y = Tensor::zeros_like(x);
  y.matrix().array() = fwd(x.matrix().array());
  Tensor y_copy = y;
  return tape.record(std::move(y), [a, y = std::move(y_copy), deriv](
                                       const Tensor& g, Tape& t) {
    const Tensor& xv = a.value();
    RowMatrix d =
        (g.matrix().array() * deriv(xv.matrix().array(), y.matrix().array()))
            .matrix();
    t.accumulate(a, d);
  });
}

}  // namespace

double softplus(double x) {
  return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Var matmul(Var a, Var b) {
  Tape& tape = tape_of(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.cols() != bv.rows()) {
    throw DimensionError("matmul: " + shape_string(av.shape()) + " x " +
                         shape_string(bv.shape()));
  }
  Tensor out = Tensor::matrix(av.rows(), bv.cols());
  out.matrix().noalias() = av.matrix() * bv.matrix();
  return tape.record(std::move(out), [a, b](const Tensor& g, Tape& t) {
    t.accumulate(a, g.matrix() * b.value().matrix().transpose());
    t.accumulate(b, a.value().matrix().transpose() * g.matrix());
  });
}

Var add(Var a, Var b) {
  Tape& tape = tape_of(a, b);
  require_same_shape(a.value(), b.value(), "add");
  Tensor out = a.value();
  out.matrix() += b.value().matrix();
  out.clear_grad();
  return tape.record(std::move(out), [a, b](const Tensor& g, Tape& t) {
    t.accumulate(a, g.values());
    t.accumulate(b, g.values());
  });
}

Var sub(Var a, Var b) {
  Tape& tape = tape_of(a, b);
  require_same_shape(a.value(), b.value(), "sub");
  Tensor out = a.value();
  out.matrix() -= b.value().matrix();
  out.clear_grad();
  return tape.record(std::move(out), [a, b](const Tensor& g, Tape& t) {
    t.accumulate(a, g.values());
    t.accumulate(b, -g.matrix());
  });
}

Var mul(Var a, Var b) {
  Tape& tape = tape_of(a, b);
  require_same_shape(a.value(), b.value(), "mul");
  Tensor out = Tensor::zeros_like(a.value());
  out.matrix().array() = a.value().matrix().array() * b.value().matrix().array();
  return tape.record(std::move(out), [a, b](const Tensor& g, Tape& t) {
    t.accumulate(a, (g.matrix().array() * b.value().matrix().array()).matrix());
    t.accumulate(b, (g.matrix().array() * a.value().matrix().array()).matrix());
  });
}

Var div(Var a, Var b) {
  Tape& tape = tape_of(a, b);
  require_same_shape(a.value(), b.value(), "div");
  Tensor out = Tensor::zeros_like(a.value());
  out.matrix().array() = a.value().matrix().array() / b.value().matrix().array();
  return tape.record(std::move(out), [a, b](const Tensor& g, Tape& t) {
    const auto av = a.value().matrix().array();
    const auto bv = b.value().matrix().array();
    t.accumulate(a, (g.matrix().array() / bv).matrix());
    t.accumulate(b, (-g.matrix().array() * av / (bv * bv)).matrix());
  });
}

Var add_row(Var m, Var row) {
  Tape& tape = tape_of(m, row);
  const Tensor& mv = m.value();
  const Tensor& rv = row.value();
  if (rv.rows() != 1 || rv.cols() != mv.cols()) {
    throw DimensionError("add_row: cannot broadcast " +
                         shape_string(rv.shape()) + " over " +
                         shape_string(mv.shape()));
  }
  Tensor out = mv;
  out.clear_grad();
  out.matrix().rowwise() += rv.matrix().row(0);
  return tape.record(std::move(out), [m, row](const Tensor& g, Tape& t) {
    t.accumulate(m, g.values());
    t.accumulate(row, g.matrix().colwise().sum());
  });
}

Var scale(Var a, double factor) {
  Tape& tape = tape_of(a);
  Tensor out = a.value();
  out.clear_grad();
  out.matrix() *= factor;
  return tape.record(std::move(out), [a, factor](const Tensor& g, Tape& t) {
    t.accumulate(a, g.matrix() * factor);
  });
}

Var add_scalar(Var a, double offset) {
  Tape& tape = tape_of(a);
  Tensor out = a.value();
  out.clear_grad();
  out.matrix().array() += offset;
  return tape.record(std::move(out), [a](const Tensor& g, Tape& t) {
    t.accumulate(a, g.values());
  });
}

Var neg(Var a) { return scale(a, -1.0); }

Var relu(Var a) {
  return unary(
      a, [](const auto& x) { return x.max(0.0); },
      [](const auto& x, const auto&) {
        return (x > 0.0).template cast<double>();
      });
}

Var tanh(Var a) {
  return unary(
      a, [](const auto& x) { return x.tanh(); },
      [](const auto&, const auto& y) { return 1.0 - y * y; });
}

Var sigmoid(Var a) {
  return unary(
      a,
      [](const auto& x) {
        return x.unaryExpr([](double v) { return pgso::nn::sigmoid(v); });
      },
      [](const auto&, const auto& y) { return y * (1.0 - y); });
}

Var softplus(Var a) {
  return unary(
      a,
      [](const auto& x) {
        return x.unaryExpr([](double v) { return pgso::nn::softplus(v); });
      },
      [](const auto& x, const auto&) {
        return x.unaryExpr([](double v) { return pgso::nn::sigmoid(v); });
      });
}

Var exp(Var a) {
  return unary(
      a, [](const auto& x) { return x.exp(); },
      [](const auto&, const auto& y) { return y; });
}

Var log(Var a) {
  return unary(
      a, [](const auto& x) { return x.log(); },
      [](const auto& x, const auto&) { return x.inverse(); });
}

Var square(Var a) {
  return unary(
      a, [](const auto& x) { return x.square(); },
      [](const auto& x, const auto&) { return 2.0 * x; });
}

Var sqrt(Var a) {
  return unary(
      a, [](const auto& x) { return x.sqrt(); },
      [](const auto&, const auto& y) {
        return y.unaryExpr(
            [](double v) { return v > 0.0 ? 0.5 / v : 0.0; });
      });
}

Var clamp_min(Var a, double floor) {
  return unary(
      a, [floor](const auto& x) { return x.max(floor); },
      [floor](const auto& x, const auto&) {
        return (x > floor).template cast<double>();
      });
}

Var sum(Var a) {
  Tape& tape = tape_of(a);
  Tensor out = Tensor::scalar(a.value().matrix().sum());
  return tape.record(std::move(out), [a](const Tensor& g, Tape& t) {
    const Tensor& av = a.value();
    RowMatrix d = RowMatrix::Constant(static_cast<Eigen::Index>(av.rows()),
                                      static_cast<Eigen::Index>(av.cols()),
                                      g.item());
    t.accumulate(a, d);
  });
}

Var mean(Var a) {
  const double n = static_cast<double>(a.value().size());
  return scale(sum(a), 1.0 / n);
}

Var mean_rows(Var a) {
  Tape& tape = tape_of(a);
  const Tensor& av = a.value();
  const double n = static_cast<double>(av.rows());
  Tensor out = Tensor::matrix(1, av.cols());
  out.matrix() = av.matrix().colwise().mean();
  return tape.record(std::move(out), [a, n](const Tensor& g, Tape& t) {
    const Tensor& v = a.value();
    RowMatrix d = g.matrix().replicate(static_cast<Eigen::Index>(v.rows()), 1) / n;
    t.accumulate(a, d);
  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no inputs");
  Tape& tape = tape_of(parts[0]);
  const std::size_t rows = parts[0].value().rows();
  std::size_t cols = 0;
  for (Var p : parts) {
    if (p.tape() != &tape) throw std::logic_error("Vars from different tapes");
    if (p.value().rows() != rows) {
      throw DimensionError("concat_cols: row mismatch " +
                           shape_string(p.value().shape()));
    }
    cols += p.value().cols();
  }
  Tensor out = Tensor::matrix(rows, cols);
  std::vector<Var> inputs(parts.begin(), parts.end());
  std::vector<Eigen::Index> offsets;
  Eigen::Index offset = 0;
  for (Var p : inputs) {
    const auto w = static_cast<Eigen::Index>(p.value().cols());
    out.matrix().middleCols(offset, w) = p.value().matrix();
    offsets.push_back(offset);
    offset += w;
  }
  return tape.record(std::move(out), [inputs, offsets](const Tensor& g,
                                                       Tape& t) {
    for (std::size_t k = 0; k < inputs.size(); ++k) {
      const auto w = static_cast<Eigen::Index>(inputs[k].value().cols());
      t.accumulate(inputs[k], g.matrix().middleCols(offsets[k], w));
    }
  });
}

Var concat_cols(std::initializer_list<Var> parts) {
  return concat_cols(std::span<const Var>(parts.begin(), parts.size()));
}

Var repeat_rows(Var row, std::size_t n) {
  Tape& tape = tape_of(row);
  const Tensor& rv = row.value();
  if (rv.rows() != 1) {
    throw DimensionError("repeat_rows: expected a single row, got " +
                         shape_string(rv.shape()));
  }
  Tensor out = Tensor::matrix(n, rv.cols());
  out.matrix() = rv.matrix().replicate(static_cast<Eigen::Index>(n), 1);
  return tape.record(std::move(out), [row](const Tensor& g, Tape& t) {
    t.accumulate(row, g.matrix().colwise().sum());
  });
}

Var column(Var a, std::size_t j) {
  Tape& tape = tape_of(a);
  const Tensor& av = a.value();
  if (j >= av.cols()) {
    throw DimensionError("column " + std::to_string(j) + " out of range for " +
                         shape_string(av.shape()));
  }
  Tensor out = Tensor::matrix(av.rows(), 1);
  out.matrix() = av.matrix().col(static_cast<Eigen::Index>(j));
  return tape.record(std::move(out), [a, j](const Tensor& g, Tape& t) {
    const Tensor& v = a.value();
    RowMatrix d = RowMatrix::Zero(static_cast<Eigen::Index>(v.rows()),
                                  static_cast<Eigen::Index>(v.cols()));
    d.col(static_cast<Eigen::Index>(j)) = g.matrix();
    t.accumulate(a, d);
  });
}

}  // namespace pgso::nn
