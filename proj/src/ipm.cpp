#include "ipm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "quantstab/sdp.hpp"

namespace quantstab::sdp::detail {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kStagnationWindow = 12;
constexpr double kDualFeasible = 1e-9;

struct Iterate {
  std::vector<MatrixXd> X;
  std::vector<MatrixXd> S;
  VectorXd x;
  VectorXd s;
  VectorXd y;
};

struct Direction {
  std::vector<MatrixXd> dX;
  std::vector<MatrixXd> dS;
  VectorXd dx;
  VectorXd ds;
  VectorXd dy;
};

// Largest alpha with X + alpha*D still PSD.
double max_step(const MatrixXd& X, const MatrixXd& D) {
  Eigen::LLT<MatrixXd> llt(X);
  if (llt.info() != Eigen::Success) return 0.0;
  MatrixXd T = llt.matrixL().solve(D);
  T = llt.matrixL().solve(T.transpose()).transpose();
  const double lmin = min_eigenvalue(T);
  return lmin >= 0.0 ? kInf : -1.0 / lmin;
}

double max_step(const VectorXd& x, const VectorXd& dx) {
  double a = kInf;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (dx(i) < 0.0) a = std::min(a, -x(i) / dx(i));
  }
  return a;
}

class Solver {
 public:
  Solver(const ConicProblem& p, const IpmOptions& o) : p_(p), o_(o) {
    nblocks_ = static_cast<int>(p.C.size());
    nlp_ = static_cast<int>(p.lp_c.size());
    nu_ = nlp_;
    for (const auto& c : p.C) nu_ += static_cast<int>(c.rows());
    norm_b_ = p.b.norm();
    norm_c_psd_ = 0.0;
    for (const auto& c : p.C) norm_c_psd_ = std::max(norm_c_psd_, c.norm());
    norm_c_lp_ = nlp_ > 0 ? p.lp_c.lpNorm<Eigen::Infinity>() : 0.0;
    active_cols_.resize(nblocks_);
    for (int k = 0; k < nblocks_; ++k) {
      for (int i = 0; i < p.m; ++i) {
        if (p.A[k].col(i).squaredNorm() > 0.0) active_cols_[k].push_back(i);
      }
    }
  }

  IpmResult run() {
    init();
    IpmResult r;
    int stall = 0;
    std::vector<double> merit;
    // Best dual-feasible iterate seen; returned when the run ends unconverged,
    // since degenerate problems can drift away from it while stalling.
    std::optional<Iterate> best;
    double best_dobj = -kInf;
    IpmResult best_report;
    for (int it = 0; it < o_.max_iterations; ++it) {
      r.iterations = it;
      if (!compute_inverses()) {
        r.message = "lost positive definiteness";
        break;
      }
      residuals();
      fill(r);
      if (r.dual_residual < kDualFeasible && (!best || r.dual_objective > best_dobj)) {
        best = it_;
        best_dobj = r.dual_objective;
        best_report = r;
      }
      // Near the accuracy floor of an ill-conditioned problem the iterates wander
      // without improving; stop once the merit has not halved in a while.
      merit.push_back(std::max({r.primal_residual, r.dual_residual, r.relative_gap}));
      if (merit.size() > kStagnationWindow &&
          merit.back() > 0.5 * merit[merit.size() - 1 - kStagnationWindow]) {
        r.message = "stagnated";
        break;
      }
      if (r.primal_residual < o_.tolerance && r.dual_residual < o_.tolerance &&
          r.relative_gap < o_.tolerance) {
        r.converged = true;
        r.message = "converged";
        break;
      }
      if (!assemble_schur()) {
        r.message = "schur complement factorization failed";
        break;
      }
      const double mu = complementarity() / nu_;

      // Predictor.
      Direction aff = direction(0.0, mu, nullptr);
      double ap = std::min(1.0, primal_step(aff));
      double ad = std::min(1.0, dual_step(aff));
      const double mu_aff = trial_complementarity(aff, ap, ad) / nu_;
      double sigma = std::pow(std::clamp(mu_aff / mu, 0.0, 1.0), 3.0);

      // Corrector. When its second-order term spoils the step (a sign of lost
      // centrality), fall back to a plain direction with stronger centering.
      Direction d = direction(sigma, mu, &aff);
      double ap_raw = primal_step(d);
      double ad_raw = dual_step(d);
      if (std::min(ap_raw, ad_raw) < 0.1) {
        Direction centred = direction(std::max(sigma, 0.5), mu, nullptr);
        const double cp = primal_step(centred);
        const double cd = dual_step(centred);
        if (std::min(cp, cd) > std::min(ap_raw, ad_raw)) {
          d = std::move(centred);
          ap_raw = cp;
          ad_raw = cd;
        }
      }
      const double fraction = std::min(o_.step_fraction, 0.9 + 0.09 * std::min({ap_raw, ad_raw, 1.0}));
      ap = std::min(1.0, fraction * ap_raw);
      ad = std::min(1.0, fraction * ad_raw);
      if (!std::isfinite(ap) || !std::isfinite(ad)) {
        r.message = "non-finite step";
        break;
      }
      for (int k = 0; k < nblocks_; ++k) {
        it_.X[k] += ap * d.dX[k];
        it_.S[k] += ad * d.dS[k];
      }
      it_.x += ap * d.dx;
      it_.s += ad * d.ds;
      it_.y += ad * d.dy;

      stall = (ap < 1e-8 && ad < 1e-8) ? stall + 1 : 0;
      if (stall >= 3) {
        r.message = "stalled";
        r.iterations = it + 1;
        if (compute_inverses()) {
          residuals();
          fill(r);
        }
        break;
      }
      if (it_.y.lpNorm<Eigen::Infinity>() > 1e15) {
        r.message = "diverged";
        break;
      }
      r.iterations = it + 1;
    }
    if (r.message.empty()) r.message = "iteration limit";
    if (!r.converged && best && best_dobj > r.dual_objective) {
      it_ = *best;
      const std::string message = r.message;
      const int iterations = r.iterations;
      r = best_report;
      r.message = message + " (best iterate)";
      r.iterations = iterations;
    }
    r.y = it_.y;
    r.X = it_.X;
    r.x_lp = it_.x;
    return r;
  }

 private:
  void init() {
    it_.X.resize(nblocks_);
    it_.S.resize(nblocks_);
    double max_a_over_b = 0.0;
    for (int i = 0; i < p_.m; ++i) {
      double na = 0.0;
      for (int k = 0; k < nblocks_; ++k) na += p_.A[k].col(i).squaredNorm();
      if (nlp_ > 0) na += p_.lp_A.col(i).squaredNorm();
      max_a_over_b = std::max(max_a_over_b, (1.0 + std::abs(p_.b(i))) / (1.0 + std::sqrt(na)));
    }
    for (int k = 0; k < nblocks_; ++k) {
      const int n = static_cast<int>(p_.C[k].rows());
      double amax = 0.0;
      for (int i = 0; i < p_.m; ++i) amax = std::max(amax, p_.A[k].col(i).norm());
      const double xi = std::max({10.0, std::sqrt(double(n)), n * max_a_over_b});
      const double eta = std::max({10.0, std::sqrt(double(n)), 1.0 + std::max(amax, p_.C[k].norm())});
      it_.X[k] = xi * MatrixXd::Identity(n, n);
      it_.S[k] = eta * MatrixXd::Identity(n, n);
    }
    it_.x = VectorXd::Constant(nlp_, std::max(10.0, max_a_over_b));
    it_.s.resize(nlp_);
    for (int j = 0; j < nlp_; ++j) {
      const double amax = p_.lp_A.row(j).lpNorm<Eigen::Infinity>();
      it_.s(j) = std::max(10.0, 1.0 + std::max(amax, std::abs(p_.lp_c(j))));
    }
    it_.y = VectorXd::Zero(p_.m);
  }

  bool compute_inverses() {
    Sinv_.resize(nblocks_);
    for (int k = 0; k < nblocks_; ++k) {
      Eigen::LLT<MatrixXd> llt(it_.S[k]);
      if (llt.info() != Eigen::Success) return false;
      Sinv_[k] = symmetrize(llt.solve(MatrixXd::Identity(it_.S[k].rows(), it_.S[k].cols())));
    }
    return (nlp_ == 0) || (it_.s.minCoeff() > 0.0 && it_.x.minCoeff() > 0.0);
  }

  VectorXd apply_A(const std::vector<MatrixXd>& Z, const VectorXd& z) const {
    VectorXd out = VectorXd::Zero(p_.m);
    for (int k = 0; k < nblocks_; ++k) out += p_.A[k].transpose() * svec(symmetrize(Z[k]));
    if (nlp_ > 0) out += p_.lp_A.transpose() * z;
    return out;
  }

  void residuals() {
    rp_ = p_.b - apply_A(it_.X, it_.x);
    Rd_.resize(nblocks_);
    for (int k = 0; k < nblocks_; ++k) {
      Rd_[k] = p_.C[k] - it_.S[k] - smat(p_.A[k] * it_.y);
    }
    rd_ = nlp_ > 0 ? VectorXd(p_.lp_c - it_.s - p_.lp_A * it_.y) : VectorXd();
  }

  double complementarity() const {
    double c = 0.0;
    for (int k = 0; k < nblocks_; ++k) c += (it_.X[k].cwiseProduct(it_.S[k])).sum();
    if (nlp_ > 0) c += it_.x.dot(it_.s);
    return c;
  }

  double trial_complementarity(const Direction& d, double ap, double ad) const {
    double c = 0.0;
    for (int k = 0; k < nblocks_; ++k) {
      c += ((it_.X[k] + ap * d.dX[k]).cwiseProduct(it_.S[k] + ad * d.dS[k])).sum();
    }
    if (nlp_ > 0) c += (it_.x + ap * d.dx).dot(it_.s + ad * d.ds);
    return c;
  }

  void fill(IpmResult& r) const {
    double pobj = 0.0;
    for (int k = 0; k < nblocks_; ++k) pobj += (p_.C[k].cwiseProduct(it_.X[k])).sum();
    if (nlp_ > 0) pobj += p_.lp_c.dot(it_.x);
    const double dobj = p_.b.dot(it_.y);
    double rd_psd = 0.0;
    for (const auto& m : Rd_) rd_psd += m.squaredNorm();
    rd_psd = std::sqrt(rd_psd) / (1.0 + norm_c_psd_);
    const double rd_lp = nlp_ > 0 ? rd_.lpNorm<Eigen::Infinity>() / (1.0 + norm_c_lp_) : 0.0;
    r.primal_objective = pobj;
    r.dual_objective = dobj;
    r.primal_residual = rp_.norm() / (1.0 + norm_b_);
    r.dual_residual = std::max(rd_psd, rd_lp);
    r.relative_gap = complementarity() / (1.0 + std::abs(pobj) + std::abs(dobj));
  }

  bool assemble_schur() {
    MatrixXd M = MatrixXd::Zero(p_.m, p_.m);
    for (int k = 0; k < nblocks_; ++k) {
      const auto& cols = active_cols_[k];
      if (cols.empty()) continue;
      MatrixXd W(p_.A[k].rows(), static_cast<Eigen::Index>(cols.size()));
      MatrixXd Ak(p_.A[k].rows(), static_cast<Eigen::Index>(cols.size()));
      for (std::size_t c = 0; c < cols.size(); ++c) {
        const MatrixXd Aj = smat(p_.A[k].col(cols[c]));
        W.col(c) = svec(symmetrize(it_.X[k] * Aj * Sinv_[k]));
        Ak.col(c) = p_.A[k].col(cols[c]);
      }
      const MatrixXd block = Ak.transpose() * W;
      for (std::size_t a = 0; a < cols.size(); ++a) {
        for (std::size_t c = 0; c < cols.size(); ++c) M(cols[a], cols[c]) += block(a, c);
      }
    }
    if (nlp_ > 0) {
      const VectorXd ratio = it_.x.cwiseQuotient(it_.s);
      M += p_.lp_A.transpose() * ratio.asDiagonal() * p_.lp_A;
    }
    M = symmetrize(M);
    use_ldlt_ = false;
    schur_.compute(M);
    if (schur_.info() == Eigen::Success) return true;
    // Near the end of degenerate problems M loses definiteness to roundoff.
    // A pivoted LDL^T usually still solves it; failing that, a growing
    // diagonal shift trades a little direction accuracy for progress.
    schur_ldlt_.compute(M);
    if (schur_ldlt_.info() == Eigen::Success && schur_ldlt_.isPositive() &&
        schur_ldlt_.vectorD().minCoeff() > 0.0) {
      use_ldlt_ = true;
      return true;
    }
    const double diag = std::max(1.0, M.diagonal().cwiseAbs().maxCoeff());
    for (double reg = 1e-14; reg <= 1e-8; reg *= 100.0) {
      MatrixXd shifted = M;
      shifted.diagonal().array() += reg * diag;
      schur_.compute(shifted);
      if (schur_.info() == Eigen::Success) return true;
    }
    return false;
  }

  // Solves the Newton system for complementarity target sigma*mu, with an optional
  // second-order correction from the predictor direction.
  Direction direction(double sigma, double mu, const Direction* aff) const {
    Direction d;
    d.dX.resize(nblocks_);
    d.dS.resize(nblocks_);
    std::vector<MatrixXd> RcSinv(nblocks_), XRdSinv(nblocks_), Rc(nblocks_);
    for (int k = 0; k < nblocks_; ++k) {
      const auto n = it_.X[k].rows();
      Rc[k] = sigma * mu * MatrixXd::Identity(n, n) - it_.X[k] * it_.S[k];
      if (aff != nullptr) Rc[k] -= aff->dX[k] * aff->dS[k];
      RcSinv[k] = Rc[k] * Sinv_[k];
      XRdSinv[k] = it_.X[k] * Rd_[k] * Sinv_[k];
    }
    VectorXd rc_lp, lp_a, lp_b;
    if (nlp_ > 0) {
      rc_lp = VectorXd::Constant(nlp_, sigma * mu) - it_.x.cwiseProduct(it_.s);
      if (aff != nullptr) rc_lp -= aff->dx.cwiseProduct(aff->ds);
      lp_a = rc_lp.cwiseQuotient(it_.s);
      lp_b = it_.x.cwiseProduct(rd_).cwiseQuotient(it_.s);
    }
    VectorXd rhs = rp_ - apply_A(RcSinv, lp_a) + apply_A(XRdSinv, lp_b);
    d.dy = use_ldlt_ ? VectorXd(schur_ldlt_.solve(rhs)) : VectorXd(schur_.solve(rhs));
    for (int k = 0; k < nblocks_; ++k) {
      d.dS[k] = Rd_[k] - smat(p_.A[k] * d.dy);
      d.dX[k] = symmetrize((Rc[k] - it_.X[k] * d.dS[k]) * Sinv_[k]);
    }
    if (nlp_ > 0) {
      d.ds = rd_ - p_.lp_A * d.dy;
      d.dx = (rc_lp - it_.x.cwiseProduct(d.ds)).cwiseQuotient(it_.s);
    }
    return d;
  }

  double primal_step(const Direction& d) const {
    double a = kInf;
    for (int k = 0; k < nblocks_; ++k) a = std::min(a, max_step(it_.X[k], d.dX[k]));
    if (nlp_ > 0) a = std::min(a, max_step(it_.x, d.dx));
    return a;
  }

  double dual_step(const Direction& d) const {
    double a = kInf;
    for (int k = 0; k < nblocks_; ++k) a = std::min(a, max_step(it_.S[k], d.dS[k]));
    if (nlp_ > 0) a = std::min(a, max_step(it_.s, d.ds));
    return a;
  }

  const ConicProblem& p_;
  const IpmOptions& o_;
  int nblocks_ = 0;
  int nlp_ = 0;
  int nu_ = 0;
  double norm_b_ = 0.0;
  double norm_c_psd_ = 0.0;
  double norm_c_lp_ = 0.0;
  std::vector<std::vector<int>> active_cols_;
  Iterate it_;
  std::vector<MatrixXd> Sinv_;
  VectorXd rp_;
  std::vector<MatrixXd> Rd_;
  VectorXd rd_;
  Eigen::LLT<MatrixXd> schur_;
  Eigen::LDLT<MatrixXd> schur_ldlt_;
  bool use_ldlt_ = false;
};

}  // namespace

IpmResult solve_conic(const ConicProblem& problem, const IpmOptions& options) {
  Solver solver(problem, options);
  return solver.run();
}

}  // namespace quantstab::sdp::detail
