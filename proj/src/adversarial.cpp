#include "quantstab/adversarial.hpp"

namespace quantstab {

namespace {

// A member of the set: the least-squares fit if it qualifies, otherwise the
// center of the set restricted to the excited subspace.
MatrixXd anchor_member(const UncertaintyEllipsoid& ell, const TrajectoryData& data, const MatrixXd& U_r) {
  const Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(data.X_minus);
  const MatrixXd least_squares = ell.X_U * cod.pseudoInverse();
  if (membership(ell, least_squares)) return least_squares;

  const MatrixXd N22_r = U_r.transpose() * ell.N22 * U_r;
  const Eigen::LLT<MatrixXd> llt(-N22_r);
  if (llt.info() == Eigen::Success) {
    const MatrixXd A_r = llt.solve((ell.N12 * U_r).transpose()).transpose();
    const MatrixXd center = A_r * U_r.transpose();
    if (membership(ell, center)) return center;
  }
  throw EmptyUncertaintySet("no member of the uncertainty set found");
}

}  // namespace

std::optional<RankDeficiencyWitness> build_witness(const UncertaintyEllipsoid& ell, const TrajectoryData& data,
                                                   double k_scale) {
  data.validate();
  const int n = data.n();
  if (ell.n() != n) throw DimensionError("ellipsoid and data dimensions differ");
  const int r = data_rank(data);
  if (r == n) return std::nullopt;

  // Left singular vectors split R^n into the excited subspace and its complement.
  const Eigen::JacobiSVD<MatrixXd> svd(data.X_minus, Eigen::ComputeFullU);
  RankDeficiencyWitness w;
  w.rank = r;
  w.E = svd.matrixU().transpose();
  w.Lambda = MatrixXd::Zero(n, n);
  w.Lambda.diagonal().tail(n - r).setOnes();
  w.A0 = anchor_member(ell, data, svd.matrixU().leftCols(r));
  w.k_scale = k_scale;
  // Lambda * E alone can be nilpotent (when the unexcited directions have no
  // component along the last coordinates), so the family is built in the
  // split coordinates instead. Its perturbation still annihilates X_minus.
  w.direction = w.E.transpose() * w.Lambda * w.E;
  w.A_bar = w.member(k_scale);
  return w;
}

InformativityReport informativity_report(const TrajectoryData& data, const UncertaintyEllipsoid& ell) {
  InformativityReport rep;
  rep.n = data.n();
  rep.rank = data_rank(data);
  rep.positive_eigenvalues = positive_eigenvalue_count(ell);
  rep.slater = slater_check(ell);
  rep.sigma_bounded = center_and_radius(ell).has_value();
  rep.kernel_inclusion = kernel_inclusion(ell);
  if (rep.rank < rep.n) {
    try {
      if (const auto w = build_witness(ell, data, 1e3)) rep.witness_spectral_radius = spectral_radius(w->A_bar);
    } catch (const EmptyUncertaintySet&) {
      // Reported as an absent witness.
    }
  }
  return rep;
}

}  // namespace quantstab
