#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "sd/embeddings.hpp"
#include "sd/features.hpp"
#include "sd/sobolev.hpp"
#include "sd/trace.hpp"

namespace sd {

/// Random feature parameters; the input dimension comes from the data.
struct FeatureSpec {
  Eigen::Index features = 128;
  double bandwidth = 0.3;
  std::uint64_t seed = 1;
  FeatureScaling scaling = FeatureScaling::kUnitVariance;
  Stream stream = Stream::kFeatures;

  FeatureMap sample(Eigen::Index dim_input) const {
    return sample_feature_map(dim_input, features, bandwidth, seed, scaling, stream);
  }
};

struct KernelDescentConfig {
  double epsilon = 1e-2;
  long steps = 1;
  double lambda = 1e-2;
  FeatureSpec features;
  std::optional<double> stop_mmd;  ///< Stop once mmd2 <= stop_mmd.
  long trace_every = 1;
  bool record_timing = false;  ///< Off keeps traces byte-reproducible.

  void validate() const;
};

struct StepDiagnostics {
  double mmd2 = 0.0;
  double rksd2 = 0.0;
  double first_variation = 0.0;  ///< -2 (mmd2 - lambda * rksd2), always <= 0.
};

struct StepResult {
  ParticleSet particles;
  StepDiagnostics diagnostics;
};

/// Diagnostics of the current state without moving it.
StepDiagnostics diagnose(const FeatureMap& fm, const KmeVec& target_mu, const ParticleSet& particles,
                         double lambda);

/// One iteration of empirical kernelized Sobolev descent: solve the critic
/// between the particles and the target, then move every particle by
/// epsilon * grad u. `step` only labels a DivergenceError.
StepResult descent_step(const FeatureMap& fm, const KmeVec& target_mu,
                        const ParticleSet& particles, double lambda, double epsilon,
                        long step = 0);

/// Called for every state 0..final with the particles and their diagnostics.
using StepObserver =
    std::function<void(long step, const ParticleSet& particles, const StepDiagnostics& diag)>;

struct DescentResult {
  ParticleSet particles;
  DescentTrace trace;
  long steps_taken = 0;
};

/// Runs `cfg.steps` iterations from the source particles. Features are sampled
/// once and frozen; the target embedding is computed once.
DescentResult run_descent(const ParticleSet& source, const ParticleSet& target,
                          const KernelDescentConfig& cfg, const StepObserver& observer = {});

struct SweepMember {
  double lambda = 0.0;
  DescentTrace trace;
  double initial_mmd2 = 0.0;
  double final_mmd2 = 0.0;
  /// First step whose mmd2 is <= threshold_fraction * initial_mmd2; empty if never reached.
  std::optional<long> steps_to_threshold;
};

/// One run_descent per lambda with the same features. Members run on up to
/// `jobs` threads; results keep the order of `lambdas`.
std::vector<SweepMember> lambda_sweep(const ParticleSet& source, const ParticleSet& target,
                                      const KernelDescentConfig& cfg,
                                      const std::vector<double>& lambdas,
                                      double threshold_fraction = 0.1, int jobs = 1);

}  // namespace sd
