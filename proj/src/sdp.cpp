#include "quantstab/sdp.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "ipm.hpp"

namespace quantstab::sdp {

VectorXd svec(const MatrixXd& m) {
  const auto n = static_cast<int>(m.rows());
  VectorXd v(svec_size(n));
  int k = 0;
  for (int j = 0; j < n; ++j) {
    v(k++) = m(j, j);
    for (int i = j + 1; i < n; ++i) v(k++) = M_SQRT2 * 0.5 * (m(i, j) + m(j, i));
  }
  return v;
}

MatrixXd smat(const VectorXd& v) {
  const int n = static_cast<int>(std::lround((std::sqrt(8.0 * double(v.size()) + 1.0) - 1.0) / 2.0));
  if (svec_size(n) != v.size()) throw DimensionError("smat: length is not triangular");
  MatrixXd m(n, n);
  int k = 0;
  for (int j = 0; j < n; ++j) {
    m(j, j) = v(k++);
    for (int i = j + 1; i < n; ++i) {
      m(i, j) = m(j, i) = v(k++) / M_SQRT2;
    }
  }
  return m;
}

// ---------------------------------------------------------------------------
// Variable

Variable::Variable(std::string name, VariableKind kind, int rows, int cols, int offset, Bound bound)
    : name_(std::move(name)), kind_(kind), rows_(rows), cols_(cols), offset_(offset),
      bound_(bound) {}

int Variable::size() const {
  switch (kind_) {
    case VariableKind::scalar:
      return 1;
    case VariableKind::symmetric:
      return svec_size(rows_);
    case VariableKind::dense:
      return rows_ * cols_;
  }
  return 0;
}

MatrixXd Variable::basis(int j) const {
  VectorXd e = VectorXd::Zero(size());
  e(j) = 1.0;
  switch (kind_) {
    case VariableKind::scalar:
      return MatrixXd::Constant(1, 1, 1.0);
    case VariableKind::symmetric:
      return smat(e);
    case VariableKind::dense:
      return Eigen::Map<const MatrixXd>(e.data(), rows_, cols_);
  }
  return {};
}

MatrixXd Variable::value(const VectorXd& coordinates) const {
  const VectorXd seg = coordinates.segment(offset_, size());
  switch (kind_) {
    case VariableKind::scalar:
      return MatrixXd::Constant(1, 1, seg(0));
    case VariableKind::symmetric:
      return smat(seg);
    case VariableKind::dense:
      return Eigen::Map<const MatrixXd>(seg.data(), rows_, cols_);
  }
  return {};
}

// ---------------------------------------------------------------------------
// LmiConstraint

LmiConstraint::LmiConstraint(int dim, std::string label, bool strict)
    : dim_(dim), label_(std::move(label)), strict_(strict),
      constant_(MatrixXd::Zero(dim, dim)) {
  if (dim <= 0) throw DimensionError("constraint dimension must be positive");
}

void LmiConstraint::place(MatrixXd& target, const MatrixXd& block, int row, int col) const {
  const auto r = static_cast<int>(block.rows());
  const auto c = static_cast<int>(block.cols());
  if (row < 0 || col < 0 || row + r > dim_ || col + c > dim_) {
    throw DimensionError("block placement outside constraint '" + label_ + "'");
  }
  if (row == col) {
    if (r != c || (block - block.transpose()).cwiseAbs().maxCoeff() >
                       1e-12 * (1.0 + block.cwiseAbs().maxCoeff())) {
      throw DimensionError("diagonal block of constraint '" + label_ + "' must be symmetric");
    }
    target.block(row, col, r, c) += block;
    return;
  }
  if (!(row + r <= col || col + c <= row)) {
    throw DimensionError("off-diagonal block straddles the diagonal in '" + label_ + "'");
  }
  target.block(row, col, r, c) += block;
  target.block(col, row, c, r) += block.transpose();
}

void LmiConstraint::add_constant(const MatrixXd& block, int row, int col) {
  place(constant_, block, row, col);
}

void LmiConstraint::add_term(const Variable& v, const MatrixXd& left, const MatrixXd& right,
                             int row, int col) {
  if (left.cols() != v.rows() || right.rows() != v.cols()) {
    throw DimensionError("term shape mismatch for variable '" + v.name() + "'");
  }
  for (int j = 0; j < v.size(); ++j) {
    const MatrixXd block = left * v.basis(j) * right;
    auto [it, inserted] = coefficients_.try_emplace(v.offset() + j, MatrixXd::Zero(dim_, dim_));
    place(it->second, block, row, col);
  }
}

void LmiConstraint::add_term(const Variable& v, int row, int col) {
  add_term(v, MatrixXd::Identity(v.rows(), v.rows()), MatrixXd::Identity(v.cols(), v.cols()), row,
           col);
}

void LmiConstraint::add_scalar_term(const Variable& s, const MatrixXd& coefficient, int row,
                                    int col) {
  if (s.kind() != VariableKind::scalar) {
    throw DimensionError("add_scalar_term needs a scalar variable, got '" + s.name() + "'");
  }
  auto [it, inserted] = coefficients_.try_emplace(s.offset(), MatrixXd::Zero(dim_, dim_));
  place(it->second, coefficient, row, col);
}

MatrixXd LmiConstraint::evaluate(const VectorXd& coordinates) const {
  MatrixXd f = constant_;
  for (const auto& [i, coef] : coefficients_) f += coordinates(i) * coef;
  return f;
}

void LmiConstraint::tighten(double shift) {
  constant_.diagonal().array() -= shift;
}

// ---------------------------------------------------------------------------
// LmiProblem

Variable& LmiProblem::push_variable(std::string name, VariableKind kind, int rows, int cols,
                                    Bound bound) {
  for (const auto& v : variables_) {
    if (v.name() == name) throw std::invalid_argument("duplicate variable name '" + name + "'");
  }
  if (rows <= 0 || cols <= 0) throw DimensionError("variable '" + name + "' has empty shape");
  variables_.emplace_back(std::move(name), kind, rows, cols, num_coordinates_, bound);
  num_coordinates_ += variables_.back().size();
  objective_.conservativeResize(num_coordinates_);
  objective_.tail(variables_.back().size()).setZero();
  return variables_.back();
}

Variable LmiProblem::add_scalar(std::string name, Bound bound) {
  return push_variable(std::move(name), VariableKind::scalar, 1, 1, bound);
}

Variable LmiProblem::add_symmetric(std::string name, int dim, Bound bound) {
  return push_variable(std::move(name), VariableKind::symmetric, dim, dim, bound);
}

Variable LmiProblem::add_dense(std::string name, int rows, int cols) {
  return push_variable(std::move(name), VariableKind::dense, rows, cols, {});
}

LmiConstraint& LmiProblem::add_constraint(int dim, std::string label, bool strict) {
  return constraints_.emplace_back(dim, std::move(label), strict);
}

void LmiProblem::set_objective(const Variable& v, double weight, Sense sense) {
  if (v.kind() != VariableKind::scalar) {
    throw std::invalid_argument("objective variable '" + v.name() + "' must be scalar");
  }
  if (sense_ != Sense::feasibility && sense_ != sense) {
    throw std::invalid_argument("objective sense already set");
  }
  sense_ = sense;
  objective_(v.offset()) += weight;
}

void LmiProblem::maximize(const Variable& v, double weight) {
  set_objective(v, weight, Sense::maximize);
}

void LmiProblem::minimize(const Variable& v, double weight) {
  set_objective(v, weight, Sense::minimize);
}

const Variable& LmiProblem::variable(std::string_view name) const {
  for (const auto& v : variables_) {
    if (v.name() == name) return v;
  }
  throw std::out_of_range("no variable named '" + std::string(name) + "'");
}

LmiProblem LmiProblem::with_bounds_as_constraints() const {
  LmiProblem out = *this;
  for (auto& v : out.variables_) {
    if (v.kind() == VariableKind::scalar) continue;
    const int n = v.rows();
    const MatrixXd eye = MatrixXd::Identity(n, n);
    if (v.bound_.lower) {
      auto& c = out.add_constraint(n, v.name() + " lower bound", v.bound_.strict_lower);
      c.add_term(v, 0, 0);
      c.add_constant(-*v.bound_.lower * eye, 0, 0);
    }
    if (v.bound_.upper) {
      auto& c = out.add_constraint(n, v.name() + " upper bound", v.bound_.strict_upper);
      c.add_term(v, -eye, eye, 0, 0);
      c.add_constant(*v.bound_.upper * eye, 0, 0);
    }
    v.bound_ = {};
  }
  return out;
}

namespace {
nlohmann::json matrix_json(const MatrixXd& m) {
  auto rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    auto row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

const char* kind_name(VariableKind k) {
  switch (k) {
    case VariableKind::scalar:
      return "scalar";
    case VariableKind::symmetric:
      return "symmetric";
    case VariableKind::dense:
      return "dense";
  }
  return "?";
}
}  // namespace

nlohmann::json LmiProblem::to_json() const {
  nlohmann::json j;
  j["sense"] = sense_ == Sense::maximize   ? "maximize"
               : sense_ == Sense::minimize ? "minimize"
                                           : "feasibility";
  auto vars = nlohmann::json::array();
  for (const auto& v : variables_) {
    nlohmann::json jv{{"name", v.name()},     {"kind", kind_name(v.kind())},
                      {"rows", v.rows()},     {"cols", v.cols()},
                      {"offset", v.offset()}, {"size", v.size()}};
    if (v.bound().lower) jv["lower"] = {{"value", *v.bound().lower}, {"strict", v.bound().strict_lower}};
    if (v.bound().upper) jv["upper"] = {{"value", *v.bound().upper}, {"strict", v.bound().strict_upper}};
    vars.push_back(std::move(jv));
  }
  j["variables"] = std::move(vars);
  auto cons = nlohmann::json::array();
  for (const auto& c : constraints_) {
    nlohmann::json jc{{"label", c.label()}, {"dim", c.dim()}, {"strict", c.strict()},
                      {"constant", matrix_json(c.constant())}};
    auto coefs = nlohmann::json::object();
    for (const auto& [i, m] : c.coefficients()) coefs[std::to_string(i)] = matrix_json(m);
    jc["coefficients"] = std::move(coefs);
    cons.push_back(std::move(jc));
  }
  j["constraints"] = std::move(cons);
  j["objective"] = std::vector<double>(objective_.data(), objective_.data() + objective_.size());
  return j;
}

// ---------------------------------------------------------------------------
// StrictMargin

StrictMargin::StrictMargin(double eps) : eps_(eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("strict margin must be positive");
}

LmiProblem StrictMargin::operator()(const LmiProblem& problem) const {
  LmiProblem out = problem.with_bounds_as_constraints();
  for (auto& c : out.constraints()) {
    if (!c.strict()) continue;
    c.tighten(eps_);
    c.make_nonstrict();
  }
  for (auto& v : out.variables_) {
    Bound& b = v.bound_;
    if (b.lower && b.strict_lower) {
      *b.lower += eps_;
      b.strict_lower = false;
    }
    if (b.upper && b.strict_upper) {
      *b.upper -= eps_;
      b.strict_upper = false;
    }
  }
  return out;
}

StrictMargin strict_margin(double eps) { return StrictMargin(eps); }

std::string to_string(Status s) {
  switch (s) {
    case Status::optimal:
      return "optimal";
    case Status::feasible:
      return "feasible";
    case Status::infeasible:
      return "infeasible";
    case Status::unbounded:
      return "unbounded";
    case Status::numerical_failure:
      return "numerical-failure";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Solve

double validated_slack(const LmiProblem& problem, const VectorXd& coordinates) {
  double slack = std::numeric_limits<double>::infinity();
  const LmiProblem lowered = problem.with_bounds_as_constraints();
  for (const auto& c : lowered.constraints()) {
    const double scale = 1.0 + spectral_norm(c.constant());
    slack = std::min(slack, min_eigenvalue(c.evaluate(coordinates)) / scale);
  }
  for (const auto& v : lowered.variables()) {
    if (v.kind() != VariableKind::scalar) continue;
    const double y = coordinates(v.offset());
    if (v.bound().lower) slack = std::min(slack, (y - *v.bound().lower) / (1.0 + std::abs(*v.bound().lower)));
    if (v.bound().upper) slack = std::min(slack, (*v.bound().upper - y) / (1.0 + std::abs(*v.bound().upper)));
  }
  return slack;
}

namespace {

struct Lowering {
  detail::ConicProblem conic;
  int bound_rows = 0;  // LP rows [0, bound_rows) are scalar bounds, the rest are box rows
  double scale = 0.0;
};

// `problem` must already be free of strict constraints and matrix bounds.
// With `phase_one`, one extra coordinate t is appended: every constraint and bound row
// gets +t, t >= -floor, and the objective becomes maximize -t.
Lowering lower(const LmiProblem& problem, const SolveOptions& opt, bool phase_one) {
  Lowering out;
  const int m0 = problem.num_coordinates();
  const int m = m0 + (phase_one ? 1 : 0);
  auto& cp = out.conic;
  cp.m = m;
  for (const auto& c : problem.constraints()) {
    cp.C.push_back(c.constant());
    out.scale = std::max(out.scale, spectral_norm(c.constant()));
    MatrixXd A = MatrixXd::Zero(svec_size(c.dim()), m);
    for (const auto& [i, coef] : c.coefficients()) A.col(i) = -svec(coef);
    if (phase_one) A.col(m0) = -svec(MatrixXd::Identity(c.dim(), c.dim()));
    cp.A.push_back(std::move(A));
  }
  std::vector<std::pair<double, VectorXd>> rows;
  for (const auto& v : problem.variables()) {
    if (v.kind() != VariableKind::scalar) continue;
    const int i = v.offset();
    if (v.bound().lower) {
      VectorXd a = VectorXd::Zero(m);
      a(i) = -1.0;
      if (phase_one) a(m0) = -1.0;
      rows.emplace_back(-*v.bound().lower, a);
    }
    if (v.bound().upper) {
      VectorXd a = VectorXd::Zero(m);
      a(i) = 1.0;
      if (phase_one) a(m0) = -1.0;
      rows.emplace_back(*v.bound().upper, a);
    }
  }
  out.bound_rows = static_cast<int>(rows.size());
  if (phase_one) {
    VectorXd a = VectorXd::Zero(m);
    a(m0) = -1.0;
    rows.emplace_back(1.0 + out.scale, a);
    ++out.bound_rows;
  }
  for (int i = 0; i < m0; ++i) {
    VectorXd a = VectorXd::Zero(m);
    a(i) = 1.0;
    rows.emplace_back(opt.box, a);
    a(i) = -1.0;
    rows.emplace_back(opt.box, a);
  }
  cp.lp_c.resize(static_cast<Eigen::Index>(rows.size()));
  cp.lp_A.resize(static_cast<Eigen::Index>(rows.size()), m);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    cp.lp_c(static_cast<Eigen::Index>(r)) = rows[r].first;
    cp.lp_A.row(static_cast<Eigen::Index>(r)) = rows[r].second.transpose();
  }
  cp.b = VectorXd::Zero(m);
  if (phase_one) {
    cp.b(m0) = -1.0;
  } else if (problem.sense() == Sense::maximize) {
    cp.b = problem.objective();
  } else if (problem.sense() == Sense::minimize) {
    cp.b = -problem.objective();
  }
  return out;
}

void fill_values(const LmiProblem& problem, const VectorXd& y, SolveResult& r) {
  r.coordinates = y.head(problem.num_coordinates());
  for (const auto& v : problem.variables()) r.values[v.name()] = v.value(r.coordinates);
}

}  // namespace

SolveResult solve(const LmiProblem& problem, const SolveOptions& options) {
  const LmiProblem prepared = strict_margin(options.eps_margin)(problem);
  const int m0 = prepared.num_coordinates();
  detail::IpmOptions ipm{options.ipm_tolerance, options.max_iterations, 0.95};
  SolveResult result;

  // Phase one: smallest common shift t making every constraint hold.
  const Lowering p1 = lower(prepared, options, true);
  const detail::IpmResult r1 = detail::solve_conic(p1.conic, ipm);
  result.stats.iterations = r1.iterations;
  result.stats.phase_one_margin = r1.y(m0);
  result.stats.primal_residual = r1.primal_residual;
  result.stats.dual_residual = r1.dual_residual;
  result.stats.relative_gap = r1.relative_gap;
  result.stats.message = "phase one: " + r1.message;

  const VectorXd y1 = r1.y.head(m0);
  const double slack1 = validated_slack(prepared, y1);
  const double margin = r1.y(m0);
  // Absolute accuracy of the phase-one value, from the gap actually reached.
  const double accuracy = std::max(options.ipm_tolerance, r1.relative_gap) *
                          (1.0 + std::abs(r1.primal_objective) + std::abs(r1.dual_objective));
  const double decide_tol = 10.0 * accuracy;
  const bool reliable = r1.converged || (r1.relative_gap < 1e-5 && r1.primal_residual < 1e-6 &&
                                         r1.dual_residual < 1e-6);
  // Stalled runs still bound t* from both sides to within the gap reached; with
  // the margin ten gaps above zero that is enough to call the sign.
  const bool settled = reliable || (r1.relative_gap < 1e-2 && r1.primal_residual < 1e-5 &&
                                    r1.dual_residual < 1e-5);
  const bool strictly_inside = slack1 >= -options.feasibility_tolerance;
  auto finish = [&](Status s, const std::string& note) {
    result.status = s;
    if (!note.empty()) result.stats.message += "; " + note;
    fill_values(prepared, y1, result);
    result.stats.min_slack = slack1;
    return result;
  };
  // A reliably positive margin proves infeasibility. Otherwise any point that
  // survives independent re-validation is a feasibility certificate, however
  // the iterations ended.
  if (margin > decide_tol && settled) return finish(Status::infeasible, "");
  if (!strictly_inside) return finish(Status::numerical_failure, "phase-one point failed re-validation");
  if (margin > 0.0 && !reliable) return finish(Status::numerical_failure, "phase-one margin not negative");
  if (prepared.sense() == Sense::feasibility) {
    result.status = Status::feasible;
    fill_values(prepared, y1, result);
    result.stats.min_slack = slack1;
    return result;
  }

  // Phase two: the actual objective over the boxed feasible set.
  const Lowering p2 = lower(prepared, options, false);
  const detail::IpmResult r2 = detail::solve_conic(p2.conic, ipm);
  result.stats.iterations += r2.iterations;
  result.stats.primal_residual = r2.primal_residual;
  result.stats.dual_residual = r2.dual_residual;
  result.stats.relative_gap = r2.relative_gap;
  result.stats.message += "; phase two: " + r2.message;
  const VectorXd y2 = r2.y.head(m0);
  const double slack2 = validated_slack(prepared, y2);
  result.stats.min_slack = slack2;
  fill_values(prepared, y2, result);
  result.objective_value = prepared.objective().dot(y2);

  double box_multiplier = 0.0;
  for (Eigen::Index r = p2.bound_rows; r < r2.x_lp.size(); ++r) {
    box_multiplier = std::max(box_multiplier, r2.x_lp(r));
  }
  if (slack2 < -options.feasibility_tolerance) {
    result.status = Status::numerical_failure;
    return result;
  }
  if (box_multiplier > 1e-6 * (1.0 + prepared.objective().norm())) {
    result.status = Status::unbounded;
    return result;
  }
  const bool accurate = r2.relative_gap < options.optimal_gap &&
                        r2.primal_residual < options.feasibility_tolerance &&
                        r2.dual_residual < options.feasibility_tolerance;
  result.status = accurate ? Status::optimal : Status::feasible;
  return result;
}

}  // namespace quantstab::sdp
