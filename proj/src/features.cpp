#include "sd/features.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "sd/error.hpp"

namespace sd {

namespace {

void check_point(const FeatureMap& fm, Eigen::Index size, const char* where) {
  if (size != fm.dim_input()) {
    throw ParameterError(std::string(where) + ": point has dimension " + std::to_string(size) +
                         ", feature map expects " + std::to_string(fm.dim_input()));
  }
}

}  // namespace

FeatureMap::FeatureMap(Eigen::MatrixXd frequencies, Eigen::VectorXd phases, double bandwidth,
                       double scale)
    : frequencies_(std::move(frequencies)),
      phases_(std::move(phases)),
      bandwidth_(bandwidth),
      scale_(scale) {
  if (frequencies_.rows() < 1 || frequencies_.cols() < 1) {
    throw ParameterError("FeatureMap: need m >= 1 features and d >= 1 inputs");
  }
  if (phases_.size() != frequencies_.rows()) {
    throw ParameterError("FeatureMap: phase vector length must equal the number of features");
  }
  if (!(bandwidth_ > 0.0) || !(scale_ > 0.0)) {
    throw ParameterError("FeatureMap: bandwidth and scale must be positive");
  }
}

FeatureMap sample_feature_map(Eigen::Index dim_input, Eigen::Index dim_features, double bandwidth,
                              std::uint64_t seed, FeatureScaling scaling, Stream stream) {
  if (dim_input < 1 || dim_features < 1) {
    throw ParameterError("sample_feature_map: d and m must be >= 1");
  }
  if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) {
    throw ParameterError("sample_feature_map: bandwidth sigma must be > 0");
  }
  Rng rng(seed, stream);
  Eigen::MatrixXd w(dim_features, dim_input);
  for (Eigen::Index j = 0; j < dim_features; ++j) {
    for (Eigen::Index a = 0; a < dim_input; ++a) w(j, a) = rng.normal() / bandwidth;
  }
  Eigen::VectorXd b(dim_features);
  for (Eigen::Index j = 0; j < dim_features; ++j) b(j) = 2.0 * std::numbers::pi * rng.uniform();
  const double scale = scaling == FeatureScaling::kUnitVariance
                           ? std::sqrt(2.0 / static_cast<double>(dim_features))
                           : 1.0;
  return FeatureMap(std::move(w), std::move(b), bandwidth, scale);
}

Eigen::VectorXd phi(const FeatureMap& fm, const Eigen::Ref<const Eigen::VectorXd>& x) {
  check_point(fm, x.size(), "phi");
  Eigen::VectorXd z = fm.frequencies() * x + fm.phases();
  return fm.scale() * z.array().cos().matrix();
}

Eigen::MatrixXd jacobian(const FeatureMap& fm, const Eigen::Ref<const Eigen::VectorXd>& x) {
  check_point(fm, x.size(), "jacobian");
  const Eigen::ArrayXd s = (fm.frequencies() * x + fm.phases()).array().sin();
  // column j = -c sin(z_j) w_j
  Eigen::MatrixXd jac = fm.frequencies().transpose();
  jac.array().rowwise() *= (-fm.scale() * s).transpose();
  return jac;
}

Eigen::MatrixXd phi_rows(const FeatureMap& fm, const Eigen::Ref<const Eigen::MatrixXd>& points) {
  check_point(fm, points.cols(), "phi_rows");
  Eigen::MatrixXd z = points * fm.frequencies().transpose();
  z.rowwise() += fm.phases().transpose();
  return fm.scale() * z.array().cos().matrix();
}

Eigen::MatrixXd gradient_rows(const FeatureMap& fm, const Eigen::Ref<const Eigen::MatrixXd>& points,
                              const Eigen::Ref<const Eigen::VectorXd>& coeffs) {
  check_point(fm, points.cols(), "gradient_rows");
  if (coeffs.size() != fm.dim_features()) {
    throw ParameterError("gradient_rows: coefficient length must equal the number of features");
  }
  Eigen::MatrixXd z = points * fm.frequencies().transpose();
  z.rowwise() += fm.phases().transpose();
  // grad_i = sum_j -c sin(z_ij) u_j w_j
  Eigen::MatrixXd weighted = z.array().sin().matrix();
  weighted.array().rowwise() *= (-fm.scale() * coeffs.array()).transpose();
  return weighted * fm.frequencies();
}

}  // namespace sd
