#pragma once

// Small dense LMI modeling layer on top of a primal-dual interior-point solver.
//
// A problem is a set of named decision variables (scalars, symmetric matrices,
// dense rectangular matrices), a list of affine matrix constraints F(y) >= 0
// (or > 0 when marked strict) and a linear objective. Everything is dense; the
// problems solved here have at most a few dozen scalar coordinates.

#include <deque>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "quantstab/linalg.hpp"

namespace quantstab::sdp {

/// Scaled symmetric vectorization: lower triangle column by column, off-diagonal
/// entries multiplied by sqrt(2) so that svec(A).dot(svec(B)) == trace(A*B).
VectorXd svec(const MatrixXd& m);
MatrixXd smat(const VectorXd& v);
inline int svec_size(int n) { return n * (n + 1) / 2; }

enum class VariableKind { scalar, symmetric, dense };

/// Bounds on a variable. For matrix variables the bounds are spectral:
/// lower means V >= lower*I, upper means V <= upper*I.
struct Bound {
  std::optional<double> lower;
  std::optional<double> upper;
  bool strict_lower = false;
  bool strict_upper = false;

  static Bound nonnegative() { return {0.0, std::nullopt, false, false}; }
  static Bound positive() { return {0.0, std::nullopt, true, false}; }
};

class Variable {
 public:
  Variable(std::string name, VariableKind kind, int rows, int cols, int offset, Bound bound);

  const std::string& name() const { return name_; }
  VariableKind kind() const { return kind_; }
  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int offset() const { return offset_; }
  /// Number of scalar coordinates this variable occupies.
  int size() const;
  const Bound& bound() const { return bound_; }

  /// Matrix value of the j-th local coordinate's unit vector.
  MatrixXd basis(int j) const;
  /// Value of this variable given the full coordinate vector.
  MatrixXd value(const VectorXd& coordinates) const;

 private:
  friend class LmiProblem;
  friend class StrictMargin;
  std::string name_;
  VariableKind kind_;
  int rows_;
  int cols_;
  int offset_;
  Bound bound_;
};

/// Affine symmetric matrix expression F(y) = F0 + sum_i y_i F_i required to be PSD.
class LmiConstraint {
 public:
  LmiConstraint(int dim, std::string label, bool strict);

  int dim() const { return dim_; }
  bool strict() const { return strict_; }
  const std::string& label() const { return label_; }

  /// Adds `block` at (row, col); off-diagonal placements are mirrored.
  void add_constant(const MatrixXd& block, int row, int col);
  /// Adds left * V * right at (row, col); off-diagonal placements are mirrored.
  void add_term(const Variable& v, const MatrixXd& left, const MatrixXd& right, int row, int col);
  /// Adds V at (row, col).
  void add_term(const Variable& v, int row, int col);
  /// Adds s * coefficient at (row, col) for a scalar variable s.
  void add_scalar_term(const Variable& s, const MatrixXd& coefficient, int row, int col);

  const MatrixXd& constant() const { return constant_; }
  const std::map<int, MatrixXd>& coefficients() const { return coefficients_; }
  MatrixXd evaluate(const VectorXd& coordinates) const;

  /// constant -= shift * I; used to turn M > 0 into M >= shift*I.
  void tighten(double shift);
  void make_nonstrict() { strict_ = false; }

 private:
  void place(MatrixXd& target, const MatrixXd& block, int row, int col) const;

  int dim_;
  std::string label_;
  bool strict_;
  MatrixXd constant_;
  std::map<int, MatrixXd> coefficients_;
};

enum class Sense { feasibility, maximize, minimize };

class LmiProblem {
 public:
  Variable add_scalar(std::string name, Bound bound = {});
  Variable add_symmetric(std::string name, int dim, Bound bound = {});
  Variable add_dense(std::string name, int rows, int cols);

  /// The returned reference stays valid while the problem is alive.
  LmiConstraint& add_constraint(int dim, std::string label, bool strict = false);

  void maximize(const Variable& v, double weight = 1.0);
  void minimize(const Variable& v, double weight = 1.0);

  int num_coordinates() const { return num_coordinates_; }
  const std::vector<Variable>& variables() const { return variables_; }
  const Variable& variable(std::string_view name) const;
  std::deque<LmiConstraint>& constraints() { return constraints_; }
  const std::deque<LmiConstraint>& constraints() const { return constraints_; }
  Sense sense() const { return sense_; }
  /// Objective weights over coordinates (in the caller's sense).
  const VectorXd& objective() const { return objective_; }

  /// Replaces spectral bounds on matrix variables by explicit constraints.
  /// Scalar bounds stay as bounds.
  LmiProblem with_bounds_as_constraints() const;

  /// Debug dump: variables, bounds, constraint coefficient matrices.
  nlohmann::json to_json() const;

 private:
  friend class StrictMargin;
  Variable& push_variable(std::string name, VariableKind kind, int rows, int cols, Bound bound);
  void set_objective(const Variable& v, double weight, Sense sense);

  std::vector<Variable> variables_;
  std::deque<LmiConstraint> constraints_;
  Sense sense_ = Sense::feasibility;
  VectorXd objective_;
  int num_coordinates_ = 0;
};

/// Rewrites strict constraints M > 0 as M >= eps*I and strict bounds s > l as s >= l + eps.
class StrictMargin {
 public:
  explicit StrictMargin(double eps);
  double eps() const { return eps_; }
  LmiProblem operator()(const LmiProblem& problem) const;

 private:
  double eps_;
};

StrictMargin strict_margin(double eps);

enum class Status { optimal, feasible, infeasible, unbounded, numerical_failure };

std::string to_string(Status s);

struct SolveOptions {
  double eps_margin = 1e-6;
  /// Termination tolerance of the interior-point iterations.
  double ipm_tolerance = 1e-9;
  /// Relative duality gap below which an objective problem is reported optimal.
  double optimal_gap = 1e-7;
  /// Re-validation tolerance: min-eig >= -feasibility_tolerance * (1 + |F0|_2).
  double feasibility_tolerance = 1e-6;
  /// Every coordinate is boxed to [-box, box]; a binding box means unbounded.
  double box = 1e6;
  int max_iterations = 200;
};

struct SolverStats {
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double relative_gap = 0.0;
  /// Optimal value of the phase-one margin problem (negative means strictly feasible).
  double phase_one_margin = 0.0;
  /// Smallest re-validated slack over all constraints and bounds.
  double min_slack = 0.0;
  std::string message;
};

struct SolveResult {
  Status status = Status::numerical_failure;
  std::map<std::string, MatrixXd> values;
  std::optional<double> objective_value;
  SolverStats stats;
  VectorXd coordinates;

  bool ok() const { return status == Status::optimal || status == Status::feasible; }
  double scalar(const std::string& name) const { return values.at(name)(0, 0); }
  const MatrixXd& matrix(const std::string& name) const { return values.at(name); }
};

/// Smallest slack of the problem's constraints and scalar bounds at `coordinates`,
/// each normalized by (1 + |constant term|_2). Computed with a plain eigen-solver.
double validated_slack(const LmiProblem& problem, const VectorXd& coordinates);

SolveResult solve(const LmiProblem& problem, const SolveOptions& options = {});

}  // namespace quantstab::sdp
