#include "sd/kernel_descent.hpp"

#include <chrono>
#include <cmath>
#include <string>
#include <thread>

#include "sd/error.hpp"

namespace sd {

void KernelDescentConfig::validate() const {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw ParameterError("kernel descent: epsilon must be > 0");
  }
  if (steps < 1) throw ParameterError("kernel descent: steps must be >= 1");
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw ParameterError("kernel descent: lambda must be > 0");
  }
  if (trace_every < 1) throw ParameterError("kernel descent: trace_every must be >= 1");
  if (stop_mmd && !(*stop_mmd >= 0.0)) {
    throw ParameterError("kernel descent: stop_mmd must be >= 0");
  }
}

namespace {

struct Analysis {
  StepDiagnostics diag;
  CriticCoeffs critic;
};

Analysis analyze(const FeatureMap& fm, const KmeVec& target_mu, const ParticleSet& particles,
                 double lambda) {
  const KmeVec mu_q = kme(fm, particles);
  if (mu_q.mu.size() != target_mu.mu.size()) {
    throw ParameterError("descent: target embedding has the wrong length");
  }
  const Eigen::VectorXd delta = target_mu.mu - mu_q.mu;
  Analysis out;
  out.diag.mmd2 = delta.squaredNorm();
  if (out.diag.mmd2 == 0.0) {
    out.critic.u = Eigen::VectorXd::Zero(delta.size());
    out.critic.lambda = lambda;
    return out;
  }
  out.critic = solve_critic(kdge(fm, particles), delta, lambda);
  out.diag.rksd2 = rksd2(out.critic, delta);
  out.diag.first_variation = -2.0 * (out.diag.mmd2 - lambda * out.diag.rksd2);
  return out;
}

}  // namespace

StepDiagnostics diagnose(const FeatureMap& fm, const KmeVec& target_mu, const ParticleSet& particles,
                         double lambda) {
  return analyze(fm, target_mu, particles, lambda).diag;
}

StepResult descent_step(const FeatureMap& fm, const KmeVec& target_mu,
                        const ParticleSet& particles, double lambda, double epsilon, long step) {
  if (!(epsilon > 0.0)) throw ParameterError("descent_step: epsilon must be > 0");
  Analysis a = analyze(fm, target_mu, particles, lambda);
  if (a.diag.mmd2 == 0.0) return StepResult{particles, a.diag};

  Eigen::MatrixXd moved = particles.points();
  moved.noalias() += epsilon * gradient_rows(fm, particles.points(), a.critic.u);
  if (!moved.allFinite()) {
    throw DivergenceError(step, "non-finite particle coordinates (epsilon too large?)");
  }
  return StepResult{ParticleSet(std::move(moved)), a.diag};
}

DescentResult run_descent(const ParticleSet& source, const ParticleSet& target,
                          const KernelDescentConfig& cfg, const StepObserver& observer) {
  cfg.validate();
  if (source.dim() != target.dim()) {
    throw ParameterError("run_descent: source and target dimensions differ");
  }
  const auto start = std::chrono::steady_clock::now();
  const FeatureMap fm = cfg.features.sample(source.dim());
  const KmeVec target_mu = kme(fm, target);

  DescentResult result{source, DescentTrace{}, 0};
  auto record = [&](long step, const StepDiagnostics& diag) {
    TraceRow row;
    row.step = step;
    row.t = static_cast<double>(step) * cfg.epsilon;
    row.mmd2 = diag.mmd2;
    row.rksd2 = diag.rksd2;
    row.first_variation = diag.first_variation;
    if (cfg.record_timing) {
      row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                              start)
                        .count();
    }
    result.trace.rows.push_back(row);
  };

  for (long step = 0;; ++step) {
    if (step == cfg.steps) {
      const StepDiagnostics diag = diagnose(fm, target_mu, result.particles, cfg.lambda);
      record(step, diag);
      if (observer) observer(step, result.particles, diag);
      break;
    }
    StepResult next =
        descent_step(fm, target_mu, result.particles, cfg.lambda, cfg.epsilon, step + 1);
    const bool stop = cfg.stop_mmd && next.diagnostics.mmd2 <= *cfg.stop_mmd;
    if (step % cfg.trace_every == 0 || stop) record(step, next.diagnostics);
    if (observer) observer(step, result.particles, next.diagnostics);
    if (stop) break;
    result.particles = std::move(next.particles);
    result.steps_taken = step + 1;
  }
  return result;
}

std::vector<SweepMember> lambda_sweep(const ParticleSet& source, const ParticleSet& target,
                                      const KernelDescentConfig& cfg,
                                      const std::vector<double>& lambdas,
                                      double threshold_fraction, int jobs) {
  if (lambdas.empty()) throw ParameterError("lambda_sweep: empty lambda grid");
  for (double l : lambdas) {
    if (!(l > 0.0)) throw ParameterError("lambda_sweep: every lambda must be > 0");
  }
  if (jobs < 1) throw ParameterError("lambda_sweep: jobs must be >= 1");

  std::vector<SweepMember> members(lambdas.size());
  auto run_member = [&](std::size_t k) {
    KernelDescentConfig member_cfg = cfg;
    member_cfg.lambda = lambdas[k];
    SweepMember& out = members[k];
    out.lambda = lambdas[k];
    auto observer = [&](long step, const ParticleSet&, const StepDiagnostics& diag) {
      if (step == 0) out.initial_mmd2 = diag.mmd2;
      if (!out.steps_to_threshold && diag.mmd2 <= threshold_fraction * out.initial_mmd2) {
        out.steps_to_threshold = step;
      }
      out.final_mmd2 = diag.mmd2;
    };
    out.trace = run_descent(source, target, member_cfg, observer).trace;
  };

  if (jobs == 1) {
    for (std::size_t k = 0; k < lambdas.size(); ++k) run_member(k);
    return members;
  }
  for (std::size_t first = 0; first < lambdas.size(); first += static_cast<std::size_t>(jobs)) {
    std::vector<std::jthread> workers;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(jobs));
    const std::size_t last = std::min(lambdas.size(), first + static_cast<std::size_t>(jobs));
    for (std::size_t k = first; k < last; ++k) {
      workers.emplace_back([&, k] {
        try {
          run_member(k);
        } catch (...) {
          errors[k - first] = std::current_exception();
        }
      });
    }
    workers.clear();
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  return members;
}

}  // namespace sd
