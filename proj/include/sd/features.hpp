#pragma once

#include <cstdint>

#include <Eigen/Dense>

#include "sd/rng.hpp"

namespace sd {

/// Output scaling of the random Fourier features.
enum class FeatureScaling {
  kUnitVariance,  ///< c = sqrt(2/m): <phi(x), phi(y)> estimates the Gaussian kernel.
  kRaw,           ///< c = 1: plain cos(Wx + b).
};

/// Frozen random Fourier feature map x -> c * cos(W x + b), R^d -> R^m.
///
/// Rows of W are frequencies w_j ~ N(0, I / sigma^2); phases b_j ~ U[0, 2 pi).
/// Immutable after construction, so one instance can be shared between threads.
class FeatureMap {
 public:
  FeatureMap(Eigen::MatrixXd frequencies, Eigen::VectorXd phases, double bandwidth, double scale);

  Eigen::Index dim_input() const { return frequencies_.cols(); }
  Eigen::Index dim_features() const { return frequencies_.rows(); }

  const Eigen::MatrixXd& frequencies() const { return frequencies_; }
  const Eigen::VectorXd& phases() const { return phases_; }
  double bandwidth() const { return bandwidth_; }
  double scale() const { return scale_; }

 private:
  Eigen::MatrixXd frequencies_;  // m x d
  Eigen::VectorXd phases_;       // m
  double bandwidth_;
  double scale_;
};

FeatureMap sample_feature_map(Eigen::Index dim_input, Eigen::Index dim_features, double bandwidth,
                              std::uint64_t seed,
                              FeatureScaling scaling = FeatureScaling::kUnitVariance,
                              Stream stream = Stream::kFeatures);

/// phi(x)_j = c * cos(<w_j, x> + b_j).
Eigen::VectorXd phi(const FeatureMap& fm, const Eigen::Ref<const Eigen::VectorXd>& x);

/// d x m Jacobian, entry (a, j) = d phi_j / d x_a = -c * sin(<w_j, x> + b_j) * W(j, a).
Eigen::MatrixXd jacobian(const FeatureMap& fm, const Eigen::Ref<const Eigen::VectorXd>& x);

/// Features of many points at once: row i of the result is phi(points.row(i)).
Eigen::MatrixXd phi_rows(const FeatureMap& fm, const Eigen::Ref<const Eigen::MatrixXd>& points);

/// Gradients of f(x) = <coeffs, phi(x)> at many points: row i is jacobian(points.row(i)) * coeffs.
Eigen::MatrixXd gradient_rows(const FeatureMap& fm, const Eigen::Ref<const Eigen::MatrixXd>& points,
                              const Eigen::Ref<const Eigen::VectorXd>& coeffs);

}  // namespace sd
