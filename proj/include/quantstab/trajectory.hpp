#pragma once

#include <optional>

#include "quantstab/linalg.hpp"

namespace quantstab {

/// One recorded experiment of horizon T: X_minus = [x(0) .. x(T-1)],
/// U = [u(0) .. u(T-1)], X_plus = [x(1) .. x(T)], and the realized noise when known.
struct TrajectoryData {
  MatrixXd X_minus;
  MatrixXd U;
  MatrixXd X_plus;
  std::optional<MatrixXd> W;

  int n() const { return static_cast<int>(X_minus.rows()); }
  int horizon() const { return static_cast<int>(X_minus.cols()); }

  /// Throws DimensionError unless the column counts agree and T >= 1.
  void validate() const;
};

}  // namespace quantstab
