#include "quantstab/data.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "quantstab/random.hpp"

namespace quantstab {

namespace {

constexpr double kTolPsd = 1e-8;
constexpr double kTolEig = 1e-9;
constexpr double kTolRank = 1e-10;
constexpr double kTolNeg = 1e-10;

bool is_symmetric(const MatrixXd& m) {
  const double scale = 1.0 + m.cwiseAbs().maxCoeff();
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale;
}

}  // namespace

NoiseBound NoiseBound::ball(double omega, int T, int n, double zeta) {
  if (!(omega >= 0.0) || !(zeta > 0.0)) throw std::invalid_argument("ball bound needs omega >= 0 and zeta > 0");
  if (T < 1 || n < 1) throw DimensionError("ball bound needs T >= 1 and n >= 1");
  return {zeta * T * omega * MatrixXd::Identity(n, n), MatrixXd::Zero(n, T), -MatrixXd::Identity(T, T)};
}

NoiseBound NoiseBound::exact(int T, int n) { return ball(0.0, T, n); }

void NoiseBound::validate() const {
  const auto n = Phi11.rows();
  const auto T = Phi22.rows();
  if (n < 1 || T < 1) throw DimensionError("noise bound blocks must be non-empty");
  require_shape(Phi11, n, n, "Phi11");
  require_shape(Phi12, n, T, "Phi12");
  require_shape(Phi22, T, T, "Phi22");
  if (!is_symmetric(Phi11) || !is_symmetric(Phi22)) {
    throw std::invalid_argument("Phi11 and Phi22 must be symmetric");
  }
  if (!(max_eigenvalue(Phi22) < -kTolNeg)) throw std::invalid_argument("Phi22 must be negative definite");
}

bool NoiseBound::admits(const MatrixXd& W, double tol) const {
  require_shape(W, Phi11.rows(), Phi22.rows(), "W");
  const MatrixXd q = Phi11 + Phi12 * W.transpose() + W * Phi12.transpose() + W * Phi22 * W.transpose();
  const double scale = 1.0 + spectral_norm(Phi11) + spectral_norm(W * Phi22 * W.transpose());
  return min_eigenvalue(q) >= -tol * scale;
}

MatrixXd UncertaintyEllipsoid::form(const MatrixXd& A) const {
  require_shape(A, n(), n(), "A");
  return symmetrize(N11 + N12 * A.transpose() + A * N12.transpose() + A * N22 * A.transpose());
}

UncertaintyEllipsoid build_ellipsoid(const TrajectoryData& data, const MatrixXd& B, const NoiseBound& bound) {
  data.validate();
  bound.validate();
  const int n = data.n();
  const int T = data.horizon();
  require_shape(B, n, data.U.rows(), "B");
  if (bound.n() != n || bound.horizon() != T) throw DimensionError("noise bound does not match the data");

  UncertaintyEllipsoid ell;
  ell.X_U = data.X_plus - B * data.U;
  MatrixXd G = MatrixXd::Zero(2 * n, n + T);
  G.topLeftCorner(n, n).setIdentity();
  G.topRightCorner(n, T) = ell.X_U;
  G.bottomRightCorner(n, T) = -data.X_minus;
  MatrixXd Phi(n + T, n + T);
  Phi << bound.Phi11, bound.Phi12, bound.Phi12.transpose(), bound.Phi22;
  ell.N = symmetrize(G * Phi * G.transpose());
  ell.N11 = ell.N.topLeftCorner(n, n);
  ell.N12 = ell.N.topRightCorner(n, n);
  ell.N22 = ell.N.bottomRightCorner(n, n);
  return ell;
}

bool membership(const UncertaintyEllipsoid& ell, const MatrixXd& A) {
  // The form grows quadratically in A, so the roundoff allowance does too.
  const double a = std::max(1.0, spectral_norm(A));
  const double scale = std::max(spectral_norm(ell.N), 1e-300) * a * a;
  return min_eigenvalue(ell.form(A)) >= -kTolPsd * scale;
}

int positive_eigenvalue_count(const UncertaintyEllipsoid& ell) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(ell.N, Eigen::EigenvaluesOnly);
  const double threshold = kTolEig * spectral_norm(ell.N);
  return static_cast<int>((es.eigenvalues().array() > threshold).count());
}

bool slater_check(const UncertaintyEllipsoid& ell) {
  return spectral_norm(ell.N) > 0.0 && positive_eigenvalue_count(ell) >= ell.n();
}

int data_rank(const TrajectoryData& data) {
  Eigen::JacobiSVD<MatrixXd> svd(data.X_minus);
  const VectorXd& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0;
  return static_cast<int>((s.array() > kTolRank * s(0)).count());
}

bool rank_condition(const TrajectoryData& data) { return data_rank(data) == data.n(); }

bool kernel_inclusion(const UncertaintyEllipsoid& ell) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(ell.N22);
  const double n22 = spectral_norm(ell.N22);
  const double n12 = spectral_norm(ell.N12);
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    if (std::abs(es.eigenvalues()(i)) > kTolEig * std::max(n22, 1e-300)) continue;
    if ((ell.N12 * es.eigenvectors().col(i)).norm() > 1e-6 * std::max(n12, 1.0)) return false;
  }
  return true;
}

std::optional<EllipsoidGeometry> center_and_radius(const UncertaintyEllipsoid& ell) {
  const double scale = std::max(spectral_norm(ell.N), 1e-300);
  if (!(max_eigenvalue(ell.N22) < -kTolEig * scale)) return std::nullopt;
  EllipsoidGeometry g;
  g.H = -ell.N22;
  const Eigen::LLT<MatrixXd> llt(g.H);
  g.A_center = llt.solve(ell.N12.transpose()).transpose();
  g.shape = symmetrize(ell.N11 + ell.N12 * g.A_center.transpose());
  return g;
}

std::vector<MatrixXd> sample_members(const UncertaintyEllipsoid& ell, int count, std::uint64_t seed) {
  if (count < 1) throw std::invalid_argument("sample count must be positive");
  const auto geometry = center_and_radius(ell);
  if (!geometry) throw std::domain_error("uncertainty set is unbounded");
  const int n = ell.n();
  // Shape eigenvalues at roundoff level are zero: noise-free data give S = 0,
  // and the square root would otherwise amplify 1e-14 into 1e-7.
  Eigen::SelfAdjointEigenSolver<MatrixXd> shape_eig(symmetrize(geometry->shape));
  const double floor = 1e-12 * ell.N.norm();
  const VectorXd root = shape_eig.eigenvalues().unaryExpr([floor](double v) { return v > floor ? std::sqrt(v) : 0.0; });
  const MatrixXd S_half = shape_eig.eigenvectors() * root.asDiagonal() * shape_eig.eigenvectors().transpose();
  const MatrixXd H_inv_half = psd_sqrt(geometry->H.inverse());

  std::vector<MatrixXd> out;
  out.reserve(static_cast<std::size_t>(count));
  out.push_back(geometry->A_center);
  for (int j = 1; j < count; ++j) {
    auto rng = keyed_engine(seed, {static_cast<std::uint64_t>(j)});
    std::normal_distribution<double> gauss;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    MatrixXd Q(n, n);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) Q(r, c) = gauss(rng);
    const double norm = spectral_norm(Q);
    Q /= norm > 0.0 ? norm : 1.0;
    // A hair inside the boundary so roundoff cannot push the sample out.
    const double radius = (j % 2 == 1) ? 1.0 - 1e-12 : unit(rng);
    out.push_back(geometry->A_center + radius * S_half * Q * H_inv_half);
  }
  return out;
}

}  // namespace quantstab
