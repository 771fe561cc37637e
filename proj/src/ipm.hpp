#pragma once

// Primal-dual interior-point method for dense block SDPs in the "dual" LMI form
//
//   maximize  b'y   subject to   C_k - sum_i y_i A_ik  PSD   (dense blocks k)
//                                c_lp - A_lp y        >= 0   (diagonal block)
//
// paired with the primal  minimize <C,X>  s.t.  <A_i,X> = b_i,  X PSD.
// Search direction: HKM, Mehrotra predictor-corrector, infeasible start.

#include <string>
#include <vector>

#include "quantstab/linalg.hpp"

namespace quantstab::sdp::detail {

struct ConicProblem {
  int m = 0;
  std::vector<MatrixXd> C;
  /// Per dense block: svec(A_ik) as column i, size svec_size(n_k) x m.
  std::vector<MatrixXd> A;
  VectorXd lp_c;
  MatrixXd lp_A;  // p x m
  VectorXd b;
};

struct IpmOptions {
  double tolerance = 1e-9;
  int max_iterations = 200;
  double step_fraction = 0.95;
};

struct IpmResult {
  bool converged = false;
  int iterations = 0;
  VectorXd y;
  std::vector<MatrixXd> X;
  VectorXd x_lp;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double relative_gap = 0.0;
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  std::string message;
};

IpmResult solve_conic(const ConicProblem& problem, const IpmOptions& options);

}  // namespace quantstab::sdp::detail
