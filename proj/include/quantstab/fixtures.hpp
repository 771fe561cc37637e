#pragma once

// Named test systems.

#include "quantstab/data.hpp"
#include "quantstab/lti.hpp"

namespace quantstab::fixtures {

/// The three-state benchmark. The published listing has -0.135 in row 3,
/// column 2 replaced by a copy of B's second entry (0.735); only -0.135
/// reproduces the published eigenvalues 1.2910, -1.3228, 0.0528.
inline LinearSystem benchmark_system() {
  MatrixXd A(3, 3);
  A << -0.192, -0.936, -0.814,
       -0.918, 0.729, -0.724,
       -0.412, -0.135, -0.516;
  VectorXd B(3);
  B << -0.554, 0.735, 0.528;
  return {A, B};
}

/// The benchmark with every entry exactly as listed, kept for comparison.
inline LinearSystem benchmark_system_as_listed() {
  MatrixXd A(3, 3);
  A << -0.192, -0.936, -0.814,
       -0.918, 0.729, -0.724,
       -0.412, 0.735, -0.516;
  VectorXd B(3);
  B << -0.554, 0.735, 0.528;
  return {A, B};
}

/// Rank-deficient two-input data set generated by A = [[0, k], [0, 0]], B = I.
struct RankDeficientExample {
  TrajectoryData data;
  MatrixXd B;
  NoiseBound bound;
};

inline RankDeficientExample example1() {
  RankDeficientExample ex;
  ex.data.X_minus = (MatrixXd(2, 2) << 1, 1, 0, 0).finished();
  ex.data.U = MatrixXd::Identity(2, 2);
  ex.data.X_plus = MatrixXd::Identity(2, 2);
  ex.B = MatrixXd::Identity(2, 2);
  ex.bound = {MatrixXd::Identity(2, 2), MatrixXd::Zero(2, 2), -MatrixXd::Identity(2, 2)};
  return ex;
}

}  // namespace quantstab::fixtures
