#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "sd/embeddings.hpp"
#include "sd/kernel_descent.hpp"
#include "sd/trace.hpp"

namespace sd {

/// Fully connected critic f(x) = W_L s(... s(W_1 x + b_1) ...) + b_L with the
/// leaky rectifier s(z) = z for z > 0 and alpha * z otherwise (z = 0 takes the
/// alpha branch). All parameters live in one flat vector: for each layer, the
/// weight matrix in column-major order followed by its bias.
class MlpCritic {
 public:
  /// `layer_sizes` = {d, h_1, ..., h_H, 1}.
  MlpCritic(std::vector<Eigen::Index> layer_sizes, double negative_slope, Eigen::VectorXd params);

  /// Weights and biases uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
  static MlpCritic initialize(Eigen::Index input_dim, const std::vector<Eigen::Index>& hidden,
                              double negative_slope, std::uint64_t seed);

  Eigen::Index input_dim() const { return sizes_.front(); }
  /// Number of affine layers (hidden layers + output layer).
  Eigen::Index num_layers() const { return static_cast<Eigen::Index>(sizes_.size()) - 1; }
  const std::vector<Eigen::Index>& layer_sizes() const { return sizes_; }
  double negative_slope() const { return slope_; }

  const Eigen::VectorXd& params() const { return params_; }
  void set_params(Eigen::VectorXd params);
  Eigen::Index param_count() const { return params_.size(); }

  Eigen::Index weight_offset(Eigen::Index layer) const { return offsets_[layer]; }
  Eigen::Index bias_offset(Eigen::Index layer) const {
    return offsets_[layer] + sizes_[layer + 1] * sizes_[layer];
  }
  Eigen::Map<const Eigen::MatrixXd> weight(Eigen::Index layer) const {
    return {params_.data() + weight_offset(layer), sizes_[layer + 1], sizes_[layer]};
  }
  Eigen::Map<const Eigen::VectorXd> bias(Eigen::Index layer) const {
    return {params_.data() + bias_offset(layer), sizes_[layer + 1]};
  }

 private:
  std::vector<Eigen::Index> sizes_;
  std::vector<Eigen::Index> offsets_;
  double slope_;
  Eigen::VectorXd params_;
};

double forward(const MlpCritic& net, const Eigen::Ref<const Eigen::VectorXd>& x);
/// f at every row of `points`.
Eigen::VectorXd forward_rows(const MlpCritic& net, const Eigen::Ref<const Eigen::MatrixXd>& points);

/// Exact grad_x f(x) (valid away from rectifier kinks).
Eigen::VectorXd grad_x(const MlpCritic& net, const Eigen::Ref<const Eigen::VectorXd>& x);
/// Row i is grad_x f at row i of `points`.
Eigen::MatrixXd grad_x_rows(const MlpCritic& net, const Eigen::Ref<const Eigen::MatrixXd>& points);

struct AlmEvaluation {
  double value = 0.0;      ///< L_S = E + lambda (1 - Omega) - rho/2 (Omega - 1)^2
  double ehat = 0.0;       ///< mean f(target) - mean f(particles)
  double omega_hat = 0.0;  ///< mean ||grad_x f(particle)||^2
  Eigen::VectorXd grad;    ///< dL_S / dparams (ascent direction)
};

/// Augmented Lagrangian objective of the critic and its exact parameter gradient.
/// The penalty term differentiates grad_x f with respect to the parameters with
/// the rectifier slopes held fixed (the activation's second derivative is zero
/// almost everywhere), so the result is the exact gradient wherever it exists.
AlmEvaluation alm_objective_and_grads(const MlpCritic& net,
                                      const Eigen::Ref<const Eigen::MatrixXd>& target_batch,
                                      const Eigen::Ref<const Eigen::MatrixXd>& particle_batch,
                                      double lambda_alm, double rho);

struct AdamConfig {
  double learning_rate = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AlmState {
  double lambda_alm = 0.01;
  double rho = 1e-6;
  AdamConfig adam;
  Eigen::VectorXd first_moment;
  Eigen::VectorXd second_moment;
  long timestep = 0;
};

/// One bias-corrected ADAM ascent step; returns the new parameters.
Eigen::VectorXd adam_update(AlmState& state, const Eigen::Ref<const Eigen::VectorXd>& params,
                            const Eigen::Ref<const Eigen::VectorXd>& grads);

/// lambda_alm <- lambda_alm - rho * (1 - omega_hat).
void multiplier_update(AlmState& state, double omega_hat);

struct NeuralDescentConfig {
  double epsilon = 3e-3;
  long critic_updates = 10;
  long warmup_updates = 50;  ///< Critic updates before the first particle move.
  long steps = 800;
  std::vector<Eigen::Index> hidden{32, 64, 32};
  double negative_slope = 0.2;
  AdamConfig adam;
  double rho = 1e-6;
  double lambda_alm_init = 0.01;
  std::uint64_t seed = 1;
  /// Independent kernel used only to report mmd2 in the trace.
  FeatureSpec eval_features{300, 0.1, 1, FeatureScaling::kUnitVariance, Stream::kEvalFeatures};
  long trace_every = 1;
  bool record_timing = false;
  Eigen::Index full_batch_limit = 4096;
  Eigen::Index batch_size = 512;

  void validate() const;
};

using NeuralObserver =
    std::function<void(long step, const ParticleSet& particles, const TraceRow& row)>;

struct NeuralDescentResult {
  ParticleSet particles;
  DescentTrace trace;
  MlpCritic critic;
};

/// Neural Sobolev descent: per particle step, warm-started critic updates then
/// x <- x + epsilon * grad_x f(x).
NeuralDescentResult run_neural_descent(const ParticleSet& source, const ParticleSet& target,
                                       const NeuralDescentConfig& cfg,
                                       const NeuralObserver& observer = {});

}  // namespace sd
