#pragma once

// Diagnostics for data that do not pin down the state matrix: when X_minus is
// rank deficient, the uncertainty set contains matrices with arbitrarily large
// eigenvalues, so no controller can stabilize all of them.

#include <optional>
#include <stdexcept>

#include "quantstab/data.hpp"
#include "quantstab/linalg.hpp"

namespace quantstab {

/// No member of the uncertainty set could be located.
class EmptyUncertaintySet : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RankDeficiencyWitness {
  int rank = 0;
  /// Orthogonal; E * X_minus has its last n - rank rows equal to zero.
  MatrixXd E;
  /// diag(0, ..., 0, 1, ..., 1) with `rank` leading zeros.
  MatrixXd Lambda;
  MatrixXd A0;
  double k_scale = 0.0;
  /// E^T Lambda E: projector onto the directions the data never excite.
  MatrixXd direction;
  /// A0 + k_scale * direction.
  MatrixXd A_bar;

  MatrixXd member(double k) const { return A0 + k * direction; }
};

/// Empty when X_minus has full row rank. Throws EmptyUncertaintySet when no
/// member of the set can be found to anchor the family.
std::optional<RankDeficiencyWitness> build_witness(const UncertaintyEllipsoid& ell, const TrajectoryData& data,
                                                   double k_scale);

struct InformativityReport {
  int n = 0;
  int rank = 0;
  int positive_eigenvalues = 0;
  bool slater = false;
  bool sigma_bounded = false;
  bool kernel_inclusion = false;
  /// Spectral radius of the witness member at k = 1e3 when the data are rank deficient.
  std::optional<double> witness_spectral_radius;

  bool informative() const { return rank == n && sigma_bounded; }
};

InformativityReport informativity_report(const TrajectoryData& data, const UncertaintyEllipsoid& ell);

}  // namespace quantstab
