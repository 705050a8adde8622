#pragma once

#include <iosfwd>

#include <Eigen/Dense>

#include "sd/embeddings.hpp"
#include "sd/features.hpp"

namespace sd {

/// Coefficients of the regularized Sobolev critic u(x) = <u, phi(x)>,
/// the solution of (D + lambda I) u = delta with delta = mu_p - mu_q.
struct CriticCoeffs {
  Eigen::VectorXd u;
  double lambda = 0.0;
  double delta_norm2 = 0.0;  ///< ||delta||^2, i.e. the MMD^2 of the pair.
  double residual = 0.0;     ///< ||(D + lambda I) u - delta|| / ||delta|| (0 when delta = 0).
  double jitter = 0.0;       ///< Diagonal shift that had to be added for the factorization.
};

CriticCoeffs solve_critic(const KdgeMat& d, const KmeVec& mu_p, const KmeVec& mu_q, double lambda);
CriticCoeffs solve_critic(const KdgeMat& d, const Eigen::Ref<const Eigen::VectorXd>& delta,
                          double lambda);

/// Squared regularized kernel Sobolev discrepancy <delta, u>.
double rksd2(const CriticCoeffs& c, const Eigen::Ref<const Eigen::VectorXd>& delta);

double critic_value(const FeatureMap& fm, const CriticCoeffs& c,
                    const Eigen::Ref<const Eigen::VectorXd>& x);

/// grad_x u(x) = J(x) u.
Eigen::VectorXd critic_grad(const FeatureMap& fm, const CriticCoeffs& c,
                            const Eigen::Ref<const Eigen::VectorXd>& x);

/// Eigen-decomposition of the critic over the principal transport directions d_j
/// (eigenvectors of D, eigenvalues descending):
///   u = sum_j a_j / (lambda_j + lambda) d_j,  a_j = <d_j, delta>.
struct SpectralReport {
  Eigen::VectorXd eigvals;       ///< Descending, eigenvalues below 1e-12 * max clamped to 0.
  Eigen::MatrixXd directions;    ///< Column j is d_j.
  Eigen::VectorXd alignments;    ///< a_j
  Eigen::VectorXd weights;       ///< 1 / (lambda_j + lambda)
  Eigen::VectorXd coefficients;  ///< a_j / (lambda_j + lambda)
  double lambda = 0.0;

  Eigen::VectorXd reconstruct() const { return directions * coefficients; }
};

SpectralReport principal_directions(const KdgeMat& d,
                                    const Eigen::Ref<const Eigen::VectorXd>& delta, double lambda);

/// True iff ||D delta|| <= tol * ||delta||, i.e. delta lies (numerically) in Null(D)
/// and the regularized descent stalls there.
bool null_alignment_test(const KdgeMat& d, const Eigen::Ref<const Eigen::VectorXd>& delta,
                         double tol);

/// CSV with header j,eigval,alignment,weight,coefficient; j starts at 1.
void write_spectral_csv(std::ostream& out, const SpectralReport& report);

}  // namespace sd
