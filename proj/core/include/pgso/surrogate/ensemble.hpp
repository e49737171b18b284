#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "pgso/nn/mlp.hpp"
#include "pgso/nn/tensor.hpp"
#include "pgso/sim/objective.hpp"
#include "pgso/sim/problem.hpp"
#include "pgso/sim/rng.hpp"
#include "pgso/surrogate/history.hpp"

namespace pgso::surrogate {

struct SurrogateConfig {
  std::vector<std::size_t> hidden{256, 256};
  std::size_t z_dim = 100;
  std::size_t epochs = 2;
  double lr = 1e-3;
  std::size_t batch_size = 512;
  /// Standardize psi, x and y columns with statistics of the training set.
  bool standardize = true;
  /// Uniformly subsample larger training sets down to this size; 0 keeps all.
  std::size_t max_train_records = 0;

  bool operator==(const SurrogateConfig&) const = default;
};

/// Per-column affine map v -> (v - mean) / scale.
struct ColumnScaler {
  std::vector<double> mean;
  std::vector<double> scale;

  static ColumnScaler identity(std::size_t dim);
  static ColumnScaler fit(const Tensor& data);
  bool operator==(const ColumnScaler&) const = default;
};

enum class GradientMode { mean_of_grads, grad_of_mean };

struct TrainStats {
  std::size_t records = 0;
  std::size_t steps = 0;
  /// Mean minibatch loss of the final epoch, per member (standardized units).
  std::vector<double> final_loss;
};

/// Ensemble of generative MLP surrogates y = f(psi, x, z), z ~ N(0, I).
/// Members share architecture and data; they differ by seed only.
class SurrogateEnsemble {
 public:
  SurrogateEnsemble(std::size_t psi_dim, std::size_t x_dim, std::size_t y_dim,
                    SurrogateConfig config, std::vector<std::uint64_t> member_seeds);

  std::size_t size() const { return members_.size(); }
  std::size_t psi_dim() const { return psi_dim_; }
  std::size_t x_dim() const { return x_dim_; }
  std::size_t y_dim() const { return y_dim_; }
  std::size_t input_dim() const { return psi_dim_ + x_dim_ + config_.z_dim; }
  const SurrogateConfig& config() const { return config_; }
  const std::vector<std::uint64_t>& member_seeds() const { return seeds_; }

  const nn::Mlp& member(std::size_t i) const { return members_.at(i); }
  /// Replaces a member's network (architecture must match).
  void set_member(std::size_t i, nn::Mlp net);

  const ColumnScaler& input_scaler() const { return in_scaler_; }
  const ColumnScaler& output_scaler() const { return out_scaler_; }
  void set_scalers(ColumnScaler input, ColumnScaler output);
  std::int64_t trainings() const { return trainings_; }

  /// Re-initializes every member from its seed (and refits the scalers).
  void reset();

  /// Cold start: reset, then train. Warm start: continue from the current
  /// weights; the scalers are fitted on the first training only.
  TrainStats train(const Dataset& data, Rng& rng, bool cold_start = true);

  /// Eager predictions in original y units, one n x y_dim tensor per member.
  /// `psi` holds one row per sample or a single row shared by all samples.
  std::vector<Tensor> predict(const Tensor& psi, const Tensor& xs,
                              const Tensor& z) const;

  /// Mean squared error against the dataset in original units, per member.
  std::vector<double> mse(const Dataset& data, Rng& rng) const;

 private:
  Tensor standardized_inputs(const Tensor& psi, const Tensor& xs, const Tensor& z) const;

  std::size_t psi_dim_;
  std::size_t x_dim_;
  std::size_t y_dim_;
  SurrogateConfig config_;
  std::vector<std::uint64_t> seeds_;
  std::vector<nn::Mlp> members_;
  ColumnScaler in_scaler_;
  ColumnScaler out_scaler_;
  bool fitted_ = false;
  std::int64_t trainings_ = 0;
};

/// n x z_dim standard normal draws.
Tensor sample_latent(std::size_t n, std::size_t z_dim, Rng& rng);

/// Population standard deviation across members of each member's mean
/// prediction over D shared (x, z) draws at psi. Multi-dimensional y is
/// averaged over coordinates first.
double uncertainty_sigma(const SurrogateEnsemble& ensemble,
                         std::span<const double> psi,
                         const sim::XDistribution& xdist, std::size_t D, Rng& rng);

/// d/dpsi of (1/N) sum_i L(f(psi, x_i, z_i)) with (x_i, z_i) shared by all
/// members. mean_of_grads averages member gradients; grad_of_mean
/// differentiates the member-averaged prediction.
std::vector<double> surrogate_objective_gradient(
    const SurrogateEnsemble& ensemble, std::span<const double> psi,
    const sim::XDistribution& xdist, const sim::Objective& objective,
    std::size_t n_grad, Rng& rng, GradientMode mode = GradientMode::mean_of_grads);

/// Surrogate estimate of E[L] at psi (no gradient), averaged over members.
double surrogate_objective(const SurrogateEnsemble& ensemble,
                           std::span<const double> psi,
                           const sim::XDistribution& xdist,
                           const sim::Objective& objective, std::size_t n, Rng& rng);

}  // namespace pgso::surrogate
