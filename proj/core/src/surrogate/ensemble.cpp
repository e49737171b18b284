#include "pgso/surrogate/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "pgso/errors.hpp"
#include "pgso/nn/adam.hpp"
#include "pgso/nn/autodiff.hpp"

namespace pgso::surrogate {

using nn::Tape;
using nn::Var;

ColumnScaler ColumnScaler::identity(std::size_t dim) {
  return {std::vector<double>(dim, 0.0), std::vector<double>(dim, 1.0)};
}

ColumnScaler ColumnScaler::fit(const Tensor& data) {
  const std::size_t n = data.rows(), d = data.cols();
  ColumnScaler s = identity(d);
  if (n == 0) return s;
  auto m = data.matrix();
  for (std::size_t j = 0; j < d; ++j) {
    const double mean = m.col(static_cast<Eigen::Index>(j)).mean();
    const double var =
        (m.col(static_cast<Eigen::Index>(j)).array() - mean).square().mean();
    s.mean[j] = mean;
    const double sd = std::sqrt(var);
    s.scale[j] = sd > 1e-12 * std::max(1.0, std::abs(mean)) ? sd : 1.0;
  }
  return s;
}

namespace {

std::vector<std::size_t> layer_sizes(std::size_t in, const std::vector<std::size_t>& hidden,
                                     std::size_t out) {
  std::vector<std::size_t> sizes{in};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(out);
  return sizes;
}

void fill_normal(std::span<double> out, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  for (double& v : out) v = normal(rng);
}

}  // namespace

Tensor sample_latent(std::size_t n, std::size_t z_dim, Rng& rng) {
  Tensor z = Tensor::matrix(n, z_dim);
  fill_normal(z.values(), rng);
  return z;
}

SurrogateEnsemble::SurrogateEnsemble(std::size_t psi_dim, std::size_t x_dim,
                                     std::size_t y_dim, SurrogateConfig config,
                                     std::vector<std::uint64_t> member_seeds)
    : psi_dim_(psi_dim),
      x_dim_(x_dim),
      y_dim_(y_dim),
      config_(std::move(config)),
      seeds_(std::move(member_seeds)) {
  if (seeds_.empty()) throw ConfigError("surrogate ensemble needs at least one member");
  if (psi_dim_ == 0 || y_dim_ == 0) throw ConfigError("surrogate needs psi and y dimensions");
  if (config_.batch_size == 0) throw ConfigError("surrogate batch size must be positive");
  reset();
}

void SurrogateEnsemble::reset() {
  const auto sizes = layer_sizes(input_dim(), config_.hidden, y_dim_);
  members_.clear();
  for (std::uint64_t seed : seeds_) members_.push_back(nn::Mlp::glorot(sizes, seed));
  in_scaler_ = ColumnScaler::identity(psi_dim_ + x_dim_);
  out_scaler_ = ColumnScaler::identity(y_dim_);
  fitted_ = false;
}

void SurrogateEnsemble::set_member(std::size_t i, nn::Mlp net) {
  const auto& ref = members_.at(i);
  if (net.input_dim() != ref.input_dim() || net.output_dim() != ref.output_dim()) {
    throw DimensionError("replacement surrogate member has the wrong interface");
  }
  members_[i] = std::move(net);
}

void SurrogateEnsemble::set_scalers(ColumnScaler input, ColumnScaler output) {
  if (input.mean.size() != psi_dim_ + x_dim_ || output.mean.size() != y_dim_) {
    throw DimensionError("scaler dimensions do not match the surrogate");
  }
  in_scaler_ = std::move(input);
  out_scaler_ = std::move(output);
  fitted_ = true;
}

Tensor SurrogateEnsemble::standardized_inputs(const Tensor& psi, const Tensor& xs,
                                              const Tensor& z) const {
  const std::size_t n = xs.rows();
  const std::size_t psi_rows = psi.rank() <= 1 ? 1 : psi.rows();
  if (psi.cols() != psi_dim_ || xs.cols() != x_dim_ || z.cols() != config_.z_dim ||
      z.rows() != n || (psi_rows != 1 && psi_rows != n)) {
    throw DimensionError("surrogate inputs: psi " + nn::shape_string(psi.shape()) +
                         ", x " + nn::shape_string(xs.shape()) + ", z " +
                         nn::shape_string(z.shape()) + " do not fit");
  }
  Tensor in = Tensor::matrix(n, input_dim());
  for (std::size_t i = 0; i < n; ++i) {
    auto dst = in.row(i);
    auto p = psi_rows == 1 ? psi.values() : psi.row(i);
    for (std::size_t j = 0; j < psi_dim_; ++j) {
      dst[j] = (p[j] - in_scaler_.mean[j]) / in_scaler_.scale[j];
    }
    auto x = xs.row(i);
    for (std::size_t j = 0; j < x_dim_; ++j) {
      const std::size_t c = psi_dim_ + j;
      dst[c] = (x[j] - in_scaler_.mean[c]) / in_scaler_.scale[c];
    }
    auto zr = z.row(i);
    std::copy(zr.begin(), zr.end(), dst.begin() + static_cast<std::ptrdiff_t>(psi_dim_ + x_dim_));
  }
  return in;
}

TrainStats SurrogateEnsemble::train(const Dataset& data_in, Rng& rng, bool cold_start) {
  if (data_in.empty()) throw ConfigError("cannot train a surrogate on an empty dataset");
  if (data_in.psi.cols() != psi_dim_ || data_in.x.cols() != x_dim_ ||
      data_in.y.cols() != y_dim_) {
    throw DimensionError("training data does not match the surrogate interface");
  }
  const Dataset* data = &data_in;
  Dataset subset;
  if (config_.max_train_records > 0 && data_in.size() > config_.max_train_records) {
    std::vector<std::size_t> idx(data_in.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(config_.max_train_records);
    std::sort(idx.begin(), idx.end());
    subset = {Tensor::matrix(idx.size(), psi_dim_), Tensor::matrix(idx.size(), x_dim_),
              Tensor::matrix(idx.size(), y_dim_)};
    for (std::size_t r = 0; r < idx.size(); ++r) {
      auto cp = [&](const Tensor& src, Tensor& dst) {
        auto s = src.row(idx[r]);
        std::copy(s.begin(), s.end(), dst.row(r).begin());
      };
      cp(data_in.psi, subset.psi);
      cp(data_in.x, subset.x);
      cp(data_in.y, subset.y);
    }
    data = &subset;
  }
  const std::size_t n = data->size();

  if (cold_start) reset();
  if (!fitted_) {
    if (config_.standardize) {
      Tensor features = Tensor::matrix(n, psi_dim_ + x_dim_);
      features.matrix().leftCols(static_cast<Eigen::Index>(psi_dim_)) = data->psi.matrix();
      features.matrix().rightCols(static_cast<Eigen::Index>(x_dim_)) = data->x.matrix();
      in_scaler_ = ColumnScaler::fit(features);
      out_scaler_ = ColumnScaler::fit(data->y);
    }
    fitted_ = true;
  }

  // Standardized features without z; z is appended per batch.
  const std::size_t feat = psi_dim_ + x_dim_;
  nn::RowMatrix features(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(feat));
  nn::RowMatrix targets(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(y_dim_));
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    for (std::size_t j = 0; j < psi_dim_; ++j) {
      features(r, static_cast<Eigen::Index>(j)) =
          (data->psi.at(i, j) - in_scaler_.mean[j]) / in_scaler_.scale[j];
    }
    for (std::size_t j = 0; j < x_dim_; ++j) {
      const std::size_t c = psi_dim_ + j;
      features(r, static_cast<Eigen::Index>(c)) =
          (data->x.at(i, j) - in_scaler_.mean[c]) / in_scaler_.scale[c];
    }
    for (std::size_t j = 0; j < y_dim_; ++j) {
      targets(r, static_cast<Eigen::Index>(j)) =
          (data->y.at(i, j) - out_scaler_.mean[j]) / out_scaler_.scale[j];
    }
  }

  const std::uint64_t base = rng();
  TrainStats stats;
  stats.records = n;
  const std::size_t batch = config_.batch_size;
  for (std::size_t m = 0; m < members_.size(); ++m) {
    Rng r(derive_seed(base, {seeds_[m]}));
    nn::Mlp& net = members_[m];
    nn::AdamState adam;
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    double epoch_loss = 0;
    for (std::size_t epoch = 0; epoch < config_.epochs; ++epoch) {
      std::shuffle(order.begin(), order.end(), r);
      epoch_loss = 0;
      std::size_t batches = 0;
      for (std::size_t start = 0; start < n; start += batch) {
        const std::size_t b = std::min(batch, n - start);
        Tensor input = Tensor::matrix(b, input_dim());
        Tensor target = Tensor::matrix(b, y_dim_);
        auto in = input.matrix();
        auto tg = target.matrix();
        for (std::size_t i = 0; i < b; ++i) {
          const auto src = static_cast<Eigen::Index>(order[start + i]);
          const auto dst = static_cast<Eigen::Index>(i);
          in.row(dst).head(static_cast<Eigen::Index>(feat)) = features.row(src);
          fill_normal(input.row(i).subspan(feat), r);
          tg.row(dst) = targets.row(src);
        }
        Tape tape;
        nn::BoundMlp bound(tape, net);
        Var out = bound.forward(tape.variable(std::move(input)));
        Var loss = nn::mean(nn::square(out - tape.variable(std::move(target))));
        const double value = loss.value().item();
        if (!std::isfinite(value)) {
          throw DivergenceError("surrogate training diverged (non-finite loss)");
        }
        auto grads = tape.backward(loss, bound.parameters());
        auto params = net.parameters();
        nn::adam_step(params, grads, adam, config_.lr);
        epoch_loss += value;
        ++batches;
        ++stats.steps;
      }
      epoch_loss /= static_cast<double>(std::max<std::size_t>(batches, 1));
    }
    stats.final_loss.push_back(epoch_loss);
  }
  ++trainings_;
  return stats;
}

std::vector<Tensor> SurrogateEnsemble::predict(const Tensor& psi, const Tensor& xs,
                                               const Tensor& z) const {
  Tensor input = standardized_inputs(psi, xs, z);
  std::vector<Tensor> out;
  out.reserve(members_.size());
  for (const auto& net : members_) {
    Tensor y = net.forward(input);
    if (y.rank() == 1) y = nn::reshaped(y, {1, y.size()});
    for (std::size_t i = 0; i < y.rows(); ++i) {
      for (std::size_t j = 0; j < y_dim_; ++j) {
        y.at(i, j) = y.at(i, j) * out_scaler_.scale[j] + out_scaler_.mean[j];
      }
    }
    out.push_back(std::move(y));
  }
  return out;
}

std::vector<double> SurrogateEnsemble::mse(const Dataset& data, Rng& rng) const {
  if (data.empty()) throw ConfigError("mse of an empty dataset");
  Tensor z = sample_latent(data.size(), config_.z_dim, rng);
  auto preds = predict(data.psi, data.x, z);
  std::vector<double> out;
  for (const auto& p : preds) {
    out.push_back((p.matrix() - data.y.matrix()).array().square().mean());
  }
  return out;
}

double uncertainty_sigma(const SurrogateEnsemble& ensemble, std::span<const double> psi,
                         const sim::XDistribution& xdist, std::size_t D, Rng& rng) {
  if (D == 0) throw ConfigError("uncertainty feature needs D >= 1");
  Tensor xs = xdist.sample(D, rng);
  Tensor z = sample_latent(D, ensemble.config().z_dim, rng);
  Tensor p = Tensor::matrix(1, psi.size(), std::vector<double>(psi.begin(), psi.end()));
  auto preds = ensemble.predict(p, xs, z);
  std::vector<double> means;
  for (const auto& y : preds) means.push_back(y.matrix().mean());
  const double mu = std::accumulate(means.begin(), means.end(), 0.0) /
                    static_cast<double>(means.size());
  double var = 0;
  for (double m : means) var += (m - mu) * (m - mu);
  return std::sqrt(var / static_cast<double>(means.size()));
}

namespace {

/// Builds the traced prediction of one member in original y units.
Var traced_member_output(Tape& tape, const nn::BoundMlp& bound, Var psi_std,
                         Var features, const SurrogateEnsemble& ens, std::size_t n) {
  Var in = nn::concat_cols({nn::repeat_rows(psi_std, n), features});
  Var out = bound.forward(in);
  const auto& s = ens.output_scaler();
  nn::RowMatrix diag = nn::RowMatrix::Zero(static_cast<Eigen::Index>(s.scale.size()),
                                           static_cast<Eigen::Index>(s.scale.size()));
  for (std::size_t j = 0; j < s.scale.size(); ++j) {
    diag(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j)) = s.scale[j];
  }
  Var scaled = nn::matmul(out, tape.variable(Tensor::from_matrix(diag)));
  return nn::add_row(scaled, tape.variable(Tensor::matrix(1, s.mean.size(), s.mean)));
}

struct GradientInputs {
  Tensor xs;
  Tensor features;  // standardized x columns followed by z
};

GradientInputs draw_gradient_inputs(const SurrogateEnsemble& ens,
                                    const sim::XDistribution& xdist, std::size_t n,
                                    Rng& rng) {
  GradientInputs g;
  g.xs = xdist.sample(n, rng);
  Tensor z = sample_latent(n, ens.config().z_dim, rng);
  const auto& sc = ens.input_scaler();
  const std::size_t xd = ens.x_dim(), zd = ens.config().z_dim, pd = ens.psi_dim();
  g.features = Tensor::matrix(n, xd + zd);
  for (std::size_t i = 0; i < n; ++i) {
    auto dst = g.features.row(i);
    for (std::size_t j = 0; j < xd; ++j) {
      dst[j] = (g.xs.at(i, j) - sc.mean[pd + j]) / sc.scale[pd + j];
    }
    auto zr = z.row(i);
    std::copy(zr.begin(), zr.end(), dst.begin() + static_cast<std::ptrdiff_t>(xd));
  }
  return g;
}

Var standardized_psi(Tape& tape, Var psi, const SurrogateEnsemble& ens) {
  const auto& sc = ens.input_scaler();
  const std::size_t pd = ens.psi_dim();
  std::vector<double> neg_mean(pd), inv_scale(pd);
  for (std::size_t j = 0; j < pd; ++j) {
    neg_mean[j] = -sc.mean[j];
    inv_scale[j] = 1.0 / sc.scale[j];
  }
  Var shifted = nn::add_row(psi, tape.variable(Tensor::matrix(1, pd, neg_mean)));
  return nn::mul(shifted, tape.variable(Tensor::matrix(1, pd, inv_scale)));
}

}  // namespace

std::vector<double> surrogate_objective_gradient(
    const SurrogateEnsemble& ensemble, std::span<const double> psi,
    const sim::XDistribution& xdist, const sim::Objective& objective,
    std::size_t n_grad, Rng& rng, GradientMode mode) {
  if (n_grad == 0) throw ConfigError("surrogate gradient needs at least one sample");
  if (psi.size() != ensemble.psi_dim()) {
    throw DimensionError("psi has " + std::to_string(psi.size()) + " entries, surrogate expects " +
                         std::to_string(ensemble.psi_dim()));
  }
  GradientInputs in = draw_gradient_inputs(ensemble, xdist, n_grad, rng);
  const Tensor psi_row = Tensor::matrix(1, psi.size(), std::vector<double>(psi.begin(), psi.end()));
  const double members = static_cast<double>(ensemble.size());
  std::vector<double> grad(psi.size(), 0.0);

  auto run = [&](std::span<const std::size_t> which, double weight) {
    Tape tape;
    Var p = tape.variable(psi_row);
    Var ps = standardized_psi(tape, p, ensemble);
    Var feats = tape.variable(in.features);
    Var y;
    for (std::size_t i : which) {
      nn::BoundMlp bound(tape, ensemble.member(i));
      Var yi = traced_member_output(tape, bound, ps, feats, ensemble, n_grad);
      y = y.valid() ? y + yi : yi;
    }
    if (which.size() > 1) y = y * (1.0 / static_cast<double>(which.size()));
    Var loss = nn::mean(objective.on_tape(y, in.xs));
    auto g = tape.backward(loss, {p});
    for (std::size_t j = 0; j < grad.size(); ++j) grad[j] += weight * g[0][j];
  };

  if (mode == GradientMode::mean_of_grads) {
    for (std::size_t i = 0; i < ensemble.size(); ++i) {
      const std::size_t one[] = {i};
      run(one, 1.0 / members);
    }
  } else {
    std::vector<std::size_t> all(ensemble.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    run(all, 1.0);
  }
  for (double g : grad) {
    if (!std::isfinite(g)) throw DivergenceError("non-finite surrogate gradient");
  }
  return grad;
}

double surrogate_objective(const SurrogateEnsemble& ensemble, std::span<const double> psi,
                           const sim::XDistribution& xdist,
                           const sim::Objective& objective, std::size_t n, Rng& rng) {
  if (n == 0) throw ConfigError("surrogate objective needs at least one sample");
  Tensor xs = xdist.sample(n, rng);
  Tensor z = sample_latent(n, ensemble.config().z_dim, rng);
  Tensor p = Tensor::matrix(1, psi.size(), std::vector<double>(psi.begin(), psi.end()));
  auto preds = ensemble.predict(p, xs, z);
  double total = 0;
  for (const auto& y : preds) total += objective.mean(y, xs);
  return total / static_cast<double>(preds.size());
}

}  // namespace pgso::surrogate
