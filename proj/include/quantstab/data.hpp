#pragma once

// Noise bounds, the data-consistent uncertainty set of state matrices and the
// checks that decide whether a data set is informative enough to work with.

#include <cstdint>
#include <optional>
#include <vector>

#include "quantstab/linalg.hpp"
#include "quantstab/trajectory.hpp"

namespace quantstab {

/// Quadratic noise bound [I; W^T]^T Phi [I; W^T] >= 0 with Phi22 negative definite.
struct NoiseBound {
  MatrixXd Phi11;
  MatrixXd Phi12;
  MatrixXd Phi22;

  /// Phi11 = zeta * T * omega * I, Phi12 = 0, Phi22 = -I: the bound implied by
  /// per-sample noise ||w(k)||^2 <= omega, with the prior inflated by zeta.
  static NoiseBound ball(double omega, int T, int n, double zeta = 1.0);
  /// Phi11 = 0, Phi12 = 0, Phi22 = -I: noise-free data.
  static NoiseBound exact(int T, int n);

  int n() const { return static_cast<int>(Phi11.rows()); }
  int horizon() const { return static_cast<int>(Phi22.rows()); }

  /// Throws DimensionError on shape problems and std::invalid_argument when
  /// Phi11 or Phi22 is not symmetric or Phi22 is not negative definite.
  void validate() const;
  /// Whether a realized noise matrix W (n x T) satisfies the bound, up to
  /// tol relative to the size of the terms.
  bool admits(const MatrixXd& W, double tol = 1e-9) const;
};

struct UncertaintyEllipsoid {
  MatrixXd N;    // 2n x 2n
  MatrixXd N11;
  MatrixXd N12;
  MatrixXd N22;
  MatrixXd X_U;  // X_plus - B U

  int n() const { return static_cast<int>(N11.rows()); }
  /// Quadratic form N11 + N12 A^T + A N12^T + A N22 A^T; A is in the set iff it is PSD.
  MatrixXd form(const MatrixXd& A) const;
};

/// B may have several columns here (Example 1 uses B = I); everything
/// downstream of this module insists on a single input.
UncertaintyEllipsoid build_ellipsoid(const TrajectoryData& data, const MatrixXd& B,
                                     const NoiseBound& bound);

bool membership(const UncertaintyEllipsoid& ell, const MatrixXd& A);
/// Generalized Slater check: N has at least n eigenvalues above 1e-9 * ||N||.
bool slater_check(const UncertaintyEllipsoid& ell);
int positive_eigenvalue_count(const UncertaintyEllipsoid& ell);
/// Numerical rank of X_minus with threshold 1e-10 * sigma_max.
int data_rank(const TrajectoryData& data);
bool rank_condition(const TrajectoryData& data);
/// ker(N22) is contained in ker(N12), checked on an eigenbasis of N22.
bool kernel_inclusion(const UncertaintyEllipsoid& ell);

/// Completed square of the membership form: the set is
/// { A_c + D : D H D^T <= S } with H = -N22.
struct EllipsoidGeometry {
  MatrixXd A_center;
  MatrixXd shape;  // S
  MatrixXd H;
};

/// Empty when N22 is not negative definite, which means the set is unbounded.
std::optional<EllipsoidGeometry> center_and_radius(const UncertaintyEllipsoid& ell);

/// `count` members of the set: index 0 is the center, odd indices lie on the
/// boundary, even indices are interior. Throws std::domain_error for an
/// unbounded set. Deterministic in (seed, index).
std::vector<MatrixXd> sample_members(const UncertaintyEllipsoid& ell, int count, std::uint64_t seed);

}  // namespace quantstab
