#pragma once

#include <Eigen/Dense>

#include "sd/features.hpp"

namespace sd {

/// A cloud of n points in R^d, one per row. Coordinates are finite, n >= 1.
class ParticleSet {
 public:
  explicit ParticleSet(Eigen::MatrixXd points);

  Eigen::Index size() const { return points_.rows(); }
  Eigen::Index dim() const { return points_.cols(); }
  const Eigen::MatrixXd& points() const { return points_; }
  auto row(Eigen::Index i) const { return points_.row(i); }

 private:
  Eigen::MatrixXd points_;
};

/// Kernel mean embedding mu(nu) = E phi(x).
struct KmeVec {
  Eigen::VectorXd mu;
};

/// Kernel derivative Gramian embedding D(nu) = E[J(x)^T J(x)], symmetric PSD m x m.
class KdgeMat {
 public:
  /// Rejects non-square input and asymmetry beyond 1e-12 relative.
  explicit KdgeMat(Eigen::MatrixXd d);

  const Eigen::MatrixXd& matrix() const { return d_; }
  Eigen::Index size() const { return d_.rows(); }

 private:
  Eigen::MatrixXd d_;
};

inline constexpr Eigen::Index kMaxDenseFeatures = 2048;

/// Particles per leaf of the reduction tree. Up to this many particles are
/// summed left to right; larger clouds are split in halves recursively.
inline constexpr Eigen::Index kReductionLeaf = 4096;

KmeVec kme(const FeatureMap& fm, const ParticleSet& ps);

KdgeMat kdge(const FeatureMap& fm, const ParticleSet& ps,
             Eigen::Index max_features = kMaxDenseFeatures);

/// ||mu_p - mu_q||^2.
double mmd2(const KmeVec& mu_p, const KmeVec& mu_q);

}  // namespace sd
