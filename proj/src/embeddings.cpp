#include "sd/embeddings.hpp"

#include <string>

#include "sd/error.hpp"

namespace sd {

namespace {

void check_dims(const FeatureMap& fm, const ParticleSet& ps, const char* where) {
  if (ps.dim() != fm.dim_input()) {
    throw ParameterError(std::string(where) + ": particles have dimension " +
                         std::to_string(ps.dim()) + ", feature map expects " +
                         std::to_string(fm.dim_input()));
  }
}

// Deterministic pairwise reduction over [lo, hi): leaves are summed by `leaf`,
// siblings are added left + right.
template <class Leaf>
Eigen::MatrixXd tree_sum(Eigen::Index lo, Eigen::Index hi, const Leaf& leaf) {
  if (hi - lo <= kReductionLeaf) return leaf(lo, hi);
  const Eigen::Index mid = lo + (hi - lo) / 2;
  Eigen::MatrixXd acc = tree_sum(lo, mid, leaf);
  acc += tree_sum(mid, hi, leaf);
  return acc;
}

}  // namespace

ParticleSet::ParticleSet(Eigen::MatrixXd points) : points_(std::move(points)) {
  if (points_.rows() < 1 || points_.cols() < 1) {
    throw ParameterError("ParticleSet: need at least one particle of dimension >= 1");
  }
  if (!points_.allFinite()) throw ParameterError("ParticleSet: non-finite coordinate");
}

KdgeMat::KdgeMat(Eigen::MatrixXd d) : d_(std::move(d)) {
  if (d_.rows() != d_.cols() || d_.rows() < 1) {
    throw ParameterError("KdgeMat: matrix must be square and non-empty");
  }
  const double scale = d_.cwiseAbs().maxCoeff();
  if ((d_ - d_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw ParameterError("KdgeMat: matrix is not symmetric");
  }
}

KmeVec kme(const FeatureMap& fm, const ParticleSet& ps) {
  check_dims(fm, ps, "kme");
  const Eigen::MatrixXd& x = ps.points();
  auto leaf = [&](Eigen::Index lo, Eigen::Index hi) {
    const Eigen::MatrixXd features = phi_rows(fm, x.middleRows(lo, hi - lo));
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(1, fm.dim_features());
    for (Eigen::Index i = 0; i < features.rows(); ++i) acc += features.row(i);
    return acc;
  };
  const Eigen::MatrixXd total = tree_sum(0, ps.size(), leaf);
  return KmeVec{total.row(0).transpose() / static_cast<double>(ps.size())};
}

KdgeMat kdge(const FeatureMap& fm, const ParticleSet& ps, Eigen::Index max_features) {
  check_dims(fm, ps, "kdge");
  const Eigen::Index m = fm.dim_features();
  const Eigen::Index d = fm.dim_input();
  if (m > max_features) {
    throw ParameterError("kdge: " + std::to_string(m) + " features exceeds the dense cap of " +
                         std::to_string(max_features));
  }
  const Eigen::MatrixXd& x = ps.points();
  const Eigen::MatrixXd& w = fm.frequencies();

  auto leaf = [&](Eigen::Index lo, Eigen::Index hi) {
    const Eigen::Index count = hi - lo;
    Eigen::MatrixXd z = x.middleRows(lo, count) * w.transpose();
    z.rowwise() += fm.phases().transpose();
    const Eigen::MatrixXd s = -fm.scale() * z.array().sin().matrix();
    // Stack the per-particle Jacobians: rows i*d .. i*d+d-1 hold J(x_i).
    Eigen::MatrixXd stacked(count * d, m);
    for (Eigen::Index i = 0; i < count; ++i) {
      for (Eigen::Index a = 0; a < d; ++a) {
        stacked.row(i * d + a) = s.row(i).cwiseProduct(w.col(a).transpose());
      }
    }
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(m, m);
    gram.selfadjointView<Eigen::Lower>().rankUpdate(stacked.transpose());
    return gram;
  };

  Eigen::MatrixXd lower = tree_sum(0, ps.size(), leaf);
  lower /= static_cast<double>(ps.size());
  Eigen::MatrixXd full = lower.selfadjointView<Eigen::Lower>();
  return KdgeMat(std::move(full));
}

double mmd2(const KmeVec& mu_p, const KmeVec& mu_q) {
  if (mu_p.mu.size() != mu_q.mu.size()) {
    throw ParameterError("mmd2: embeddings have different lengths");
  }
  return (mu_p.mu - mu_q.mu).squaredNorm();
}

}  // namespace sd
