#include "sd/neural.hpp"

#include <chrono>
#include <cmath>
#include <string>

#include "sd/error.hpp"
#include "sd/rng.hpp"

namespace sd {

MlpCritic::MlpCritic(std::vector<Eigen::Index> layer_sizes, double negative_slope,
                     Eigen::VectorXd params)
    : sizes_(std::move(layer_sizes)), slope_(negative_slope), params_(std::move(params)) {
  if (sizes_.size() < 2) throw ParameterError("MlpCritic: need input and output sizes");
  if (sizes_.back() != 1) throw ParameterError("MlpCritic: output dimension must be 1");
  for (Eigen::Index s : sizes_) {
    if (s < 1) throw ParameterError("MlpCritic: layer sizes must be >= 1");
  }
  Eigen::Index offset = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    offsets_.push_back(offset);
    offset += sizes_[l + 1] * sizes_[l] + sizes_[l + 1];
  }
  if (params_.size() != offset) {
    throw ParameterError("MlpCritic: expected " + std::to_string(offset) + " parameters, got " +
                         std::to_string(params_.size()));
  }
}

MlpCritic MlpCritic::initialize(Eigen::Index input_dim, const std::vector<Eigen::Index>& hidden,
                                double negative_slope, std::uint64_t seed) {
  std::vector<Eigen::Index> sizes{input_dim};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(1);
  Eigen::Index count = 0;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) count += sizes[l + 1] * (sizes[l] + 1);

  Rng rng(seed, Stream::kNetInit);
  Eigen::VectorXd params(count);
  Eigen::Index k = 0;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(sizes[l]));
    const Eigen::Index layer_count = sizes[l + 1] * (sizes[l] + 1);
    for (Eigen::Index i = 0; i < layer_count; ++i) params(k++) = rng.uniform(-bound, bound);
  }
  return MlpCritic(std::move(sizes), negative_slope, std::move(params));
}

void MlpCritic::set_params(Eigen::VectorXd params) {
  if (params.size() != params_.size()) throw ParameterError("MlpCritic: parameter count mismatch");
  params_ = std::move(params);
}

namespace {

// Column-batched pass: samples are columns.
struct Activations {
  std::vector<Eigen::MatrixXd> inputs;  // input to layer l, size_l x B
  std::vector<Eigen::ArrayXXd> slopes;  // rectifier slope at hidden layer l
  Eigen::RowVectorXd output;
};

Activations run_forward(const MlpCritic& net, const Eigen::Ref<const Eigen::MatrixXd>& columns) {
  const Eigen::Index layers = net.num_layers();
  const double alpha = net.negative_slope();
  Activations act;
  act.inputs.reserve(layers);
  act.slopes.reserve(layers - 1);
  act.inputs.emplace_back(columns);
  for (Eigen::Index l = 0; l < layers; ++l) {
    Eigen::MatrixXd z = net.weight(l) * act.inputs.back();
    z.colwise() += net.bias(l);
    if (l + 1 == layers) {
      act.output = z.row(0);
    } else {
      Eigen::ArrayXXd slope = (z.array() > 0.0).select(Eigen::ArrayXXd::Ones(z.rows(), z.cols()),
                                                       Eigen::ArrayXXd::Constant(z.rows(), z.cols(), alpha));
      act.inputs.emplace_back((z.array() * slope).matrix());
      act.slopes.push_back(std::move(slope));
    }
  }
  return act;
}

// gammas[l] = df / d(pre-activation of layer l); returns grad_x f as d x B.
Eigen::MatrixXd run_backward(const MlpCritic& net, const Activations& act,
                             std::vector<Eigen::MatrixXd>& gammas) {
  const Eigen::Index layers = net.num_layers();
  const Eigen::Index batch = act.output.size();
  gammas.assign(layers, Eigen::MatrixXd());
  gammas[layers - 1] = Eigen::MatrixXd::Ones(1, batch);
  for (Eigen::Index l = layers - 1; l > 0; --l) {
    Eigen::MatrixXd back = net.weight(l).transpose() * gammas[l];
    gammas[l - 1] = (back.array() * act.slopes[l - 1]).matrix();
  }
  return net.weight(0).transpose() * gammas[0];
}

Eigen::MatrixXd as_columns(const MlpCritic& net, const Eigen::Ref<const Eigen::MatrixXd>& rows,
                           const char* where) {
  if (rows.cols() != net.input_dim()) {
    throw ParameterError(std::string(where) + ": points have dimension " +
                         std::to_string(rows.cols()) + ", critic expects " +
                         std::to_string(net.input_dim()));
  }
  return rows.transpose();
}

// Accumulates scale * gamma_l * inputs_l^T (and bias row sums) into grad.
void add_parameter_grads(const MlpCritic& net, const std::vector<Eigen::MatrixXd>& gammas,
                         const std::vector<Eigen::MatrixXd>& inputs, double scale,
                         bool include_bias, Eigen::VectorXd& grad) {
  const auto& sizes = net.layer_sizes();
  for (Eigen::Index l = 0; l < net.num_layers(); ++l) {
    Eigen::Map<Eigen::MatrixXd> gw(grad.data() + net.weight_offset(l), sizes[l + 1], sizes[l]);
    gw.noalias() += scale * gammas[l] * inputs[l].transpose();
    if (include_bias) {
      Eigen::Map<Eigen::VectorXd> gb(grad.data() + net.bias_offset(l), sizes[l + 1]);
      gb += scale * gammas[l].rowwise().sum();
    }
  }
}

}  // namespace

double forward(const MlpCritic& net, const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() != net.input_dim()) throw ParameterError("forward: dimension mismatch");
  return run_forward(net, x).output(0);
}

Eigen::VectorXd forward_rows(const MlpCritic& net, const Eigen::Ref<const Eigen::MatrixXd>& points) {
  return run_forward(net, as_columns(net, points, "forward_rows")).output.transpose();
}

Eigen::VectorXd grad_x(const MlpCritic& net, const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() != net.input_dim()) throw ParameterError("grad_x: dimension mismatch");
  std::vector<Eigen::MatrixXd> gammas;
  return run_backward(net, run_forward(net, x), gammas).col(0);
}

Eigen::MatrixXd grad_x_rows(const MlpCritic& net, const Eigen::Ref<const Eigen::MatrixXd>& points) {
  std::vector<Eigen::MatrixXd> gammas;
  const Activations act = run_forward(net, as_columns(net, points, "grad_x_rows"));
  return run_backward(net, act, gammas).transpose();
}

AlmEvaluation alm_objective_and_grads(const MlpCritic& net,
                                      const Eigen::Ref<const Eigen::MatrixXd>& target_batch,
                                      const Eigen::Ref<const Eigen::MatrixXd>& particle_batch,
                                      double lambda_alm, double rho) {
  if (target_batch.rows() == 0 || particle_batch.rows() == 0) {
    throw ParameterError("alm_objective_and_grads: empty batch");
  }
  const Eigen::Index layers = net.num_layers();
  const auto n_target = static_cast<double>(target_batch.rows());
  const auto n_particles = static_cast<double>(particle_batch.rows());

  AlmEvaluation out;
  Eigen::VectorXd grad_e = Eigen::VectorXd::Zero(net.param_count());
  Eigen::VectorXd grad_omega = Eigen::VectorXd::Zero(net.param_count());
  std::vector<Eigen::MatrixXd> gammas;

  // Target side of E.
  {
    const Activations act = run_forward(net, as_columns(net, target_batch, "alm"));
    run_backward(net, act, gammas);
    out.ehat = act.output.mean();
    add_parameter_grads(net, gammas, act.inputs, 1.0 / n_target, true, grad_e);
  }

  // Particle side of E, and the gradient penalty Omega.
  const Activations act = run_forward(net, as_columns(net, particle_batch, "alm"));
  const Eigen::MatrixXd input_grads = run_backward(net, act, gammas);
  out.ehat -= act.output.mean();
  add_parameter_grads(net, gammas, act.inputs, -1.0 / n_particles, true, grad_e);
  out.omega_hat = input_grads.squaredNorm() / n_particles;

  // With slopes frozen, grad_x f = W_0^T S_0 W_1^T ... W_{L-1}^T is multilinear in
  // the weights and independent of the biases. Differentiating ||grad_x f||^2 with
  // respect to W_l gives 2 * gamma_l * phi_l^T, where phi_l pushes grad_x f forward
  // through the linearized layers 0..l-1.
  std::vector<Eigen::MatrixXd> pushed;
  pushed.reserve(layers);
  pushed.push_back(input_grads);
  for (Eigen::Index l = 0; l + 1 < layers; ++l) {
    Eigen::MatrixXd z = net.weight(l) * pushed.back();
    pushed.push_back((z.array() * act.slopes[l]).matrix());
  }
  add_parameter_grads(net, gammas, pushed, 2.0 / n_particles, false, grad_omega);

  const double violation = out.omega_hat - 1.0;
  out.value = out.ehat + lambda_alm * (1.0 - out.omega_hat) - 0.5 * rho * violation * violation;
  out.grad = grad_e - (lambda_alm + rho * violation) * grad_omega;
  return out;
}

Eigen::VectorXd adam_update(AlmState& state, const Eigen::Ref<const Eigen::VectorXd>& params,
                            const Eigen::Ref<const Eigen::VectorXd>& grads) {
  if (params.size() != grads.size()) throw ParameterError("adam_update: size mismatch");
  if (state.first_moment.size() != params.size()) {
    state.first_moment = Eigen::VectorXd::Zero(params.size());
    state.second_moment = Eigen::VectorXd::Zero(params.size());
    state.timestep = 0;
  }
  const AdamConfig& cfg = state.adam;
  ++state.timestep;
  state.first_moment = cfg.beta1 * state.first_moment + (1.0 - cfg.beta1) * grads;
  state.second_moment =
      cfg.beta2 * state.second_moment + (1.0 - cfg.beta2) * grads.cwiseAbs2();
  const double t = static_cast<double>(state.timestep);
  const double correction1 = 1.0 - std::pow(cfg.beta1, t);
  const double correction2 = 1.0 - std::pow(cfg.beta2, t);
  const Eigen::ArrayXd m_hat = state.first_moment.array() / correction1;
  const Eigen::ArrayXd v_hat = state.second_moment.array() / correction2;
  return params + (cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.eps)).matrix();
}

void multiplier_update(AlmState& state, double omega_hat) {
  state.lambda_alm -= state.rho * (1.0 - omega_hat);
}

void NeuralDescentConfig::validate() const {
  if (!(epsilon > 0.0)) throw ParameterError("neural descent: epsilon must be > 0");
  if (critic_updates < 1) throw ParameterError("neural descent: critic_updates must be >= 1");
  if (warmup_updates < 1) throw ParameterError("neural descent: warmup_updates must be >= 1");
  if (steps < 1) throw ParameterError("neural descent: steps must be >= 1");
  if (hidden.empty()) throw ParameterError("neural descent: need at least one hidden layer");
  if (!(adam.learning_rate > 0.0)) throw ParameterError("neural descent: learning rate must be > 0");
  if (!(rho > 0.0)) throw ParameterError("neural descent: rho must be > 0");
  if (trace_every < 1) throw ParameterError("neural descent: trace_every must be >= 1");
  if (batch_size < 1 || full_batch_limit < 1) {
    throw ParameterError("neural descent: batch sizes must be >= 1");
  }
}

namespace {

Eigen::MatrixXd draw_batch(const Eigen::MatrixXd& points, const NeuralDescentConfig& cfg, Rng& rng) {
  if (points.rows() <= cfg.full_batch_limit) return points;
  Eigen::MatrixXd batch(cfg.batch_size, points.cols());
  for (Eigen::Index i = 0; i < cfg.batch_size; ++i) {
    batch.row(i) = points.row(static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(points.rows()))));
  }
  return batch;
}

}  // namespace

NeuralDescentResult run_neural_descent(const ParticleSet& source, const ParticleSet& target,
                                       const NeuralDescentConfig& cfg,
                                       const NeuralObserver& observer) {
  cfg.validate();
  if (source.dim() != target.dim()) {
    throw ParameterError("run_neural_descent: source and target dimensions differ");
  }
  const auto start = std::chrono::steady_clock::now();
  const Eigen::Index dim = source.dim();

  MlpCritic net = MlpCritic::initialize(dim, cfg.hidden, cfg.negative_slope, cfg.seed);
  AlmState state;
  state.lambda_alm = cfg.lambda_alm_init;
  state.rho = cfg.rho;
  state.adam = cfg.adam;

  const FeatureMap eval_map = cfg.eval_features.sample(dim);
  const KmeVec target_eval = kme(eval_map, target);
  Rng batch_rng(cfg.seed, Stream::kBatch);

  Eigen::MatrixXd particles = source.points();
  DescentTrace trace;
  trace.neural = true;

  for (long step = 0;; ++step) {
    const ParticleSet current(particles);
    TraceRow row;
    row.step = step;
    row.t = static_cast<double>(step) * cfg.epsilon;
    row.mmd2 = mmd2(target_eval, kme(eval_map, current));

    if (step < cfg.steps) {
      // Warm restart: the critic keeps its parameters from the previous step.
      const long updates = step == 0 ? cfg.warmup_updates : cfg.critic_updates;
      AlmEvaluation ev;
      for (long k = 0; k < updates; ++k) {
        const Eigen::MatrixXd target_batch = draw_batch(target.points(), cfg, batch_rng);
        const Eigen::MatrixXd particle_batch = draw_batch(particles, cfg, batch_rng);
        ev = alm_objective_and_grads(net, target_batch, particle_batch, state.lambda_alm,
                                     state.rho);
        net.set_params(adam_update(state, net.params(), ev.grad));
        multiplier_update(state, ev.omega_hat);
      }
      row.lambda_alm = state.lambda_alm;
      row.omega_hat = ev.omega_hat;
      row.ehat = ev.ehat;
    }
    if (cfg.record_timing) {
      row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                              start)
                        .count();
    }
    if (step % cfg.trace_every == 0 || step == cfg.steps) trace.rows.push_back(row);
    if (observer) observer(step, current, row);
    if (step == cfg.steps) break;

    particles.noalias() += cfg.epsilon * grad_x_rows(net, particles);
    if (!particles.allFinite()) {
      throw DivergenceError(step + 1, "non-finite particle coordinates (epsilon too large?)");
    }
  }
  return NeuralDescentResult{ParticleSet(std::move(particles)), std::move(trace), std::move(net)};
}

}  // namespace sd
