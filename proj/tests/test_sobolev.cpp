#include <doctest.h>

#include <cmath>
#include <sstream>

#include "sd/embeddings.hpp"
#include "sd/error.hpp"
#include "sd/sobolev.hpp"
#include "support.hpp"

using namespace sd;

namespace {

double residual(const Eigen::MatrixXd& d, const Eigen::VectorXd& u, const Eigen::VectorXd& delta,
                double lambda) {
  return ((d + lambda * Eigen::MatrixXd::Identity(d.rows(), d.cols())) * u - delta).norm() /
         delta.norm();
}

}  // namespace

TEST_CASE("hand-solved 2x2 critic") {
  Eigen::Matrix2d d;
  d << 2, 0, 0, 0;
  const Eigen::Vector2d delta(3, 3);
  const auto c = solve_critic(KdgeMat(d), delta, 1.0);
  CHECK(c.u(0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(c.u(1) == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(rksd2(c, delta) == doctest::Approx(12.0).epsilon(1e-14));
  CHECK(c.delta_norm2 == doctest::Approx(18.0));
  // Brute-force check with a general dense solver.
  const Eigen::Vector2d brute = (d + Eigen::Matrix2d::Identity()).fullPivLu().solve(delta);
  CHECK((brute - c.u).norm() < 1e-14);

  const auto rep = principal_directions(KdgeMat(d), delta, 1.0);
  CHECK(rep.eigvals(0) == doctest::Approx(2.0));
  CHECK(rep.eigvals(1) == 0.0);
  CHECK(std::abs(rep.alignments(0)) == doctest::Approx(3.0));
  CHECK(std::abs(rep.alignments(1)) == doctest::Approx(3.0));
  CHECK(std::abs(rep.coefficients(0)) == doctest::Approx(1.0));
  CHECK(std::abs(rep.coefficients(1)) == doctest::Approx(3.0));
  CHECK((rep.reconstruct() - c.u).norm() < 1e-14);
}

TEST_CASE("zero delta gives a zero critic") {
  auto r = sdtest::rng(1);
  const KdgeMat d(sdtest::random_psd(r, 5, 3));
  const auto c = solve_critic(d, Eigen::VectorXd::Zero(5), 0.1);
  CHECK(c.u == Eigen::VectorXd::Zero(5));
  CHECK(rksd2(c, Eigen::VectorXd::Zero(5)) == 0.0);
  const KmeVec mu{Eigen::VectorXd::LinSpaced(5, 0, 1)};
  CHECK(solve_critic(d, mu, mu, 0.1).u == Eigen::VectorXd::Zero(5));
}

TEST_CASE("zero D gives u = delta / lambda") {
  const Eigen::Vector3d delta(1, -2, 0.5);
  const double lambda = 0.25;
  const auto c = solve_critic(KdgeMat(Eigen::Matrix3d::Zero()), delta, lambda);
  CHECK((c.u - delta / lambda).norm() < 1e-14);
  CHECK(rksd2(c, delta) == doctest::Approx(delta.squaredNorm() / lambda));
}

TEST_CASE("solve_critic rejects bad arguments") {
  const KdgeMat d(Eigen::Matrix2d::Identity());
  CHECK_THROWS_AS(solve_critic(d, Eigen::Vector2d(1, 0), 0.0), ParameterError);
  CHECK_THROWS_AS(solve_critic(d, Eigen::Vector2d(1, 0), -1.0), ParameterError);
  CHECK_THROWS_AS(solve_critic(d, Eigen::Vector3d(1, 0, 0), 1.0), ParameterError);
}

TEST_CASE("solver residual, spectral identities and the regularization bound") {
  auto r = sdtest::rng(2);
  for (int inst = 0; inst < 40; ++inst) {
    const Eigen::Index m = 2 + inst % 30;
    const Eigen::MatrixXd dm = sdtest::random_psd(r, m, 1 + inst % m);
    const Eigen::VectorXd delta = sdtest::normal_vector(r, m, 0.1);
    const double lambda = std::pow(10.0, -3.0 + 3.0 * r.uniform());
    const KdgeMat d(dm);
    const auto c = solve_critic(d, delta, lambda);
    CHECK(c.residual <= 1e-8);
    CHECK(residual(dm, c.u, delta, lambda) <= 1e-8);
    const double s = rksd2(c, delta);
    CHECK(s >= 0.0);
    CHECK(lambda * s <= delta.squaredNorm() + 1e-10);

    // rksd2 = ||(D + lambda I)^{-1/2} delta||^2 = sum_j a_j^2 / (lambda_j + lambda).
    const auto rep = principal_directions(d, delta, lambda);
    const double spectral = (rep.alignments.array().square() * rep.weights.array()).sum();
    CHECK(sdtest::rel_err(s, spectral) < 1e-8);
    CHECK((rep.reconstruct() - c.u).norm() <= 1e-8 * c.u.norm());
    for (Eigen::Index j = 1; j < m; ++j) CHECK(rep.eigvals(j) <= rep.eigvals(j - 1));
    CHECK(rep.eigvals.minCoeff() >= 0.0);
    CHECK((rep.coefficients.array() - rep.alignments.array() * rep.weights.array()).abs().maxCoeff() <
          1e-15 * (1 + rep.coefficients.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("rksd2 is non-increasing in lambda") {
  auto r = sdtest::rng(3);
  for (int inst = 0; inst < 20; ++inst) {
    const Eigen::Index m = 3 + inst;
    const KdgeMat d(sdtest::random_psd(r, m, 2 + inst / 2));
    const Eigen::VectorXd delta = sdtest::normal_vector(r, m);
    double prev = std::numeric_limits<double>::infinity();
    for (double lambda : {1e-3, 1e-2, 1e-1, 1.0, 10.0}) {
      const double s = rksd2(solve_critic(d, delta, lambda), delta);
      CHECK(s <= prev * (1 + 1e-12));
      prev = s;
    }
  }
}

TEST_CASE("critic value and gradient") {
  const auto fm = sample_feature_map(2, 20, 0.5, 4);
  const Eigen::Vector2d x(0.3, -0.1);
  CriticCoeffs c;
  c.lambda = 1.0;
  c.u = Eigen::VectorXd::Zero(20);
  CHECK(critic_value(fm, c, x) == 0.0);
  CHECK(critic_grad(fm, c, x) == Eigen::Vector2d::Zero());

  c.u = Eigen::VectorXd::Unit(20, 7);
  CHECK(critic_value(fm, c, x) ==
        doctest::Approx(fm.scale() * std::cos(fm.frequencies().row(7).dot(x) + fm.phases()(7))));

  auto r = sdtest::rng(4);
  c.u = sdtest::normal_vector(r, 20);
  CHECK(critic_value(fm, c, x) == doctest::Approx(c.u.dot(phi(fm, x))).epsilon(1e-14));
  const Eigen::VectorXd g = critic_grad(fm, c, x);
  const double h = 1e-6;
  for (int a = 0; a < 2; ++a) {
    Eigen::Vector2d xp = x, xm = x;
    xp(a) += h;
    xm(a) -= h;
    const double fd = (critic_value(fm, c, xp) - critic_value(fm, c, xm)) / (2 * h);
    CHECK(std::abs(fd - g(a)) / std::max(std::abs(g(a)), 1e-3) < 1e-5);
  }
  CriticCoeffs scaled = c;
  scaled.u *= -2.5;
  CHECK((critic_grad(fm, scaled, x) + 2.5 * g).norm() < 1e-14);
}

TEST_CASE("coefficients concentrate on the null space for small lambda") {
  Eigen::Matrix3d d = Eigen::Matrix3d::Zero();
  d(0, 0) = 4.0;
  d(1, 1) = 1.0;
  const Eigen::Vector3d delta(0, 0, 2);  // orthogonal to the range of D
  const double lambda = 1e-6;
  const auto rep = principal_directions(KdgeMat(d), delta, lambda);
  CHECK(rep.eigvals(2) == 0.0);
  CHECK(rep.weights(2) == doctest::Approx(1.0 / lambda));
  CHECK(std::abs(rep.coefficients(2)) == doctest::Approx(2.0 / lambda));
  CHECK(std::abs(rep.coefficients(0)) < 1e-9);
  CHECK(std::abs(rep.coefficients(1)) < 1e-9);
}

TEST_CASE("small eigenvalues are clamped to zero") {
  Eigen::Matrix2d d;
  d << 1.0, 0.0, 0.0, 1e-14;
  const auto rep = principal_directions(KdgeMat(d), Eigen::Vector2d(1, 1), 0.5);
  CHECK(rep.eigvals(1) == 0.0);
}

TEST_CASE("null alignment test") {
  CHECK_FALSE(null_alignment_test(KdgeMat(Eigen::Matrix2d::Identity()), Eigen::Vector2d(1, 0), 1e-8));
  Eigen::Matrix2d d;
  d << 1, 0, 0, 0;
  CHECK(null_alignment_test(KdgeMat(d), Eigen::Vector2d(0, 1), 1e-8));
  CHECK_THROWS_AS(null_alignment_test(KdgeMat(d), Eigen::Vector2d(0, 0), 1e-8), ParameterError);

  auto r = sdtest::rng(5);
  for (int t = 0; t < 10; ++t) {
    const Eigen::Index m = 6;
    const Eigen::MatrixXd q = sdtest::normal_matrix(r, m, m).householderQr().householderQ();
    Eigen::VectorXd ev = Eigen::VectorXd::LinSpaced(m, 0.0, 2.0);  // smallest eigenvalue 0
    const Eigen::MatrixXd dm = q * ev.asDiagonal() * q.transpose();
    const KdgeMat dk(0.5 * (dm + dm.transpose()));
    CHECK(null_alignment_test(dk, q.col(0), 1e-8));
    CHECK_FALSE(null_alignment_test(dk, q.col(1) + q.col(0), 1e-8));
  }
}

TEST_CASE("spectral CSV layout") {
  Eigen::Matrix2d d;
  d << 2, 0, 0, 0;
  const auto rep = principal_directions(KdgeMat(d), Eigen::Vector2d(3, 3), 1.0);
  std::ostringstream os;
  write_spectral_csv(os, rep);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  CHECK(line == "j,eigval,alignment,weight,coefficient");
  std::getline(is, line);
  CHECK(line.rfind("1,2,", 0) == 0);
  std::getline(is, line);
  CHECK(line.rfind("2,0,", 0) == 0);
  CHECK_FALSE(std::getline(is, line));
}
