#include "sd/sobolev.hpp"

#include <cmath>
#include <ostream>
#include <string>

#include "sd/error.hpp"
#include "sd/io.hpp"

namespace sd {

namespace {

constexpr int kJitterAttempts = 3;
constexpr int kRefinementSteps = 2;

void check_lambda(double lambda, const char* where) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw ParameterError(std::string(where) + ": lambda must be > 0 (got " +
                         std::to_string(lambda) + ")");
  }
}

}  // namespace

CriticCoeffs solve_critic(const KdgeMat& d, const KmeVec& mu_p, const KmeVec& mu_q,
                          double lambda) {
  if (mu_p.mu.size() != mu_q.mu.size()) {
    throw ParameterError("solve_critic: embeddings have different lengths");
  }
  return solve_critic(d, mu_p.mu - mu_q.mu, lambda);
}

CriticCoeffs solve_critic(const KdgeMat& d, const Eigen::Ref<const Eigen::VectorXd>& delta,
                          double lambda) {
  check_lambda(lambda, "solve_critic");
  const Eigen::Index m = d.size();
  if (delta.size() != m) throw ParameterError("solve_critic: delta length must equal KDGE size");

  CriticCoeffs out;
  out.lambda = lambda;
  out.delta_norm2 = delta.squaredNorm();
  if (out.delta_norm2 == 0.0) {
    out.u = Eigen::VectorXd::Zero(m);
    return out;
  }

  Eigen::MatrixXd system = d.matrix();
  system.diagonal().array() += lambda;
  Eigen::LLT<Eigen::MatrixXd> llt(system);
  if (llt.info() != Eigen::Success) {
    const double base = 1e-12 * d.matrix().trace() / static_cast<double>(m);
    double jitter = base > 0.0 ? base : 1e-12 * lambda;
    bool ok = false;
    for (int attempt = 0; attempt < kJitterAttempts && !ok; ++attempt, jitter *= 10.0) {
      Eigen::MatrixXd shifted = system;
      shifted.diagonal().array() += jitter;
      llt.compute(shifted);
      if (llt.info() == Eigen::Success) {
        out.jitter = jitter;
        ok = true;
      }
    }
    if (!ok) throw NumericalError("solve_critic: D + lambda I is not positive definite");
  }

  Eigen::VectorXd u = llt.solve(delta);
  // Iterative refinement against the unshifted system keeps the residual near
  // machine precision even when lambda is tiny relative to ||D||.
  for (int it = 0; it < kRefinementSteps; ++it) {
    const Eigen::VectorXd r = delta - system * u;
    u += llt.solve(r);
  }
  if (!u.allFinite()) throw NumericalError("solve_critic: non-finite critic coefficients");
  out.residual = (system * u - delta).norm() / std::sqrt(out.delta_norm2);
  out.u = std::move(u);
  return out;
}

double rksd2(const CriticCoeffs& c, const Eigen::Ref<const Eigen::VectorXd>& delta) {
  if (delta.size() != c.u.size()) throw ParameterError("rksd2: delta length mismatch");
  return std::max(0.0, delta.dot(c.u));
}

double critic_value(const FeatureMap& fm, const CriticCoeffs& c,
                    const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (c.u.size() != fm.dim_features()) throw ParameterError("critic_value: coefficient mismatch");
  return c.u.dot(phi(fm, x));
}

Eigen::VectorXd critic_grad(const FeatureMap& fm, const CriticCoeffs& c,
                            const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (c.u.size() != fm.dim_features()) throw ParameterError("critic_grad: coefficient mismatch");
  return jacobian(fm, x) * c.u;
}

SpectralReport principal_directions(const KdgeMat& d,
                                    const Eigen::Ref<const Eigen::VectorXd>& delta,
                                    double lambda) {
  check_lambda(lambda, "principal_directions");
  const Eigen::Index m = d.size();
  if (delta.size() != m) throw ParameterError("principal_directions: delta length mismatch");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(d.matrix());
  if (solver.info() != Eigen::Success) {
    throw NumericalError("principal_directions: eigensolver did not converge");
  }
  SpectralReport report;
  report.lambda = lambda;
  // Eigen returns ascending order.
  report.eigvals = solver.eigenvalues().reverse();
  report.directions = solver.eigenvectors().rowwise().reverse();
  const double top = std::max(report.eigvals(0), 0.0);
  for (Eigen::Index j = 0; j < m; ++j) {
    if (report.eigvals(j) < 1e-12 * top) report.eigvals(j) = 0.0;
  }
  report.alignments = report.directions.transpose() * delta;
  report.weights = (report.eigvals.array() + lambda).inverse().matrix();
  report.coefficients = report.alignments.cwiseProduct(report.weights);
  return report;
}

bool null_alignment_test(const KdgeMat& d, const Eigen::Ref<const Eigen::VectorXd>& delta,
                         double tol) {
  if (delta.size() != d.size()) throw ParameterError("null_alignment_test: length mismatch");
  const double norm = delta.norm();
  if (norm == 0.0) {
    throw ParameterError("null_alignment_test: delta is zero (distributions already match)");
  }
  return (d.matrix() * delta).norm() <= tol * norm;
}

void write_spectral_csv(std::ostream& out, const SpectralReport& report) {
  out << "j,eigval,alignment,weight,coefficient\n";
  for (Eigen::Index j = 0; j < report.eigvals.size(); ++j) {
    out << (j + 1) << ',' << format_double(report.eigvals(j)) << ','
        << format_double(report.alignments(j)) << ',' << format_double(report.weights(j)) << ','
        << format_double(report.coefficients(j)) << '\n';
  }
}

}  // namespace sd
