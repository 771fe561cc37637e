#include "quantstab/certificates.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "quantstab/lti.hpp"

namespace quantstab {

std::string to_string(CertificateStatus s) {
  switch (s) {
    case CertificateStatus::feasible:
      return "feasible";
    case CertificateStatus::infeasible:
      return "infeasible";
    case CertificateStatus::inconclusive:
      return "inconclusive";
    case CertificateStatus::unbounded:
      return "unbounded";
    case CertificateStatus::numerical_failure:
      return "numerical-failure";
  }
  return "unknown";
}

void StabilizationCertificate::derive() {
  const Eigen::LLT<MatrixXd> llt(Y);
  if (llt.info() != Eigen::Success) throw NumericalError("certificate Y is not positive definite");
  P = llt.solve(MatrixXd::Identity(Y.rows(), Y.cols()));
  P = symmetrize(P);
  K = (P * X.transpose()).transpose();
  rho = rho_from_delta(delta);
  Z = symmetrize(Y - X.transpose() * X);
}

namespace {

double input_scale(const VectorXd& B) { return std::max(B.squaredNorm(), 1e-12); }

// Inside the solver N is rescaled so that the weakest direction of -N22 has
// size kNormTarget (or, for an unbounded set, so that ||N|| = kNormTarget).
// The multiplier has to dominate exactly that direction, so this is the scale
// on which alpha_cap is meaningful. The solver's multiplier equals
// alpha * multiplier_scale.
constexpr double kNormTarget = 10.0;

double multiplier_scale(const UncertaintyEllipsoid& ell) {
  const double n_norm = spectral_norm(ell.N);
  if (!(n_norm > 0.0)) return 1.0;
  const double weakest = -max_eigenvalue(ell.N22);
  if (weakest > 1e-9 * n_norm) return weakest / kNormTarget;
  return n_norm / kNormTarget;
}

// Builds the robust synthesis LMI. With `delta` empty, d = delta^2 becomes a variable.
sdp::LmiProblem build_lmi(const UncertaintyEllipsoid& ell, const VectorXd& B, std::optional<double> delta,
                          const CertificateOptions& options) {
  const int n = ell.n();
  require_shape(B, n, 1, "B");
  if (delta && !(*delta > 0.0 && *delta < 1.0)) throw std::invalid_argument("delta must lie in (0, 1)");

  // N enters only through alpha * N, so normalizing it just rescales alpha.
  const double scale = multiplier_scale(ell);
  const MatrixXd N11 = ell.N11 / scale;
  const MatrixXd N12 = ell.N12 / scale;
  const MatrixXd N22 = ell.N22 / scale;
  const MatrixXd BB = B * B.transpose();
  const MatrixXd I = MatrixXd::Identity(n, n);

  sdp::LmiProblem p;
  auto Y = p.add_symmetric("Y", n, sdp::Bound{0.0, options.y_cap * input_scale(B), true, false});
  auto X = p.add_dense("X", 1, n);
  auto alpha = p.add_scalar("alpha", sdp::Bound{0.0, options.alpha_cap / kNormTarget, false, false});
  auto beta = p.add_scalar("beta", sdp::Bound::positive());
  std::optional<sdp::Variable> d;
  if (!delta) {
    const double cap = 1.0 - options.delta_cap_gap;
    d = p.add_scalar("d", sdp::Bound{0.0, cap * cap, false, false});
  }

  auto& c1 = p.add_constraint(3 * n + 1, "theorem1");
  c1.add_term(Y, 0, 0);
  c1.add_scalar_term(beta, -I, 0, 0);
  c1.add_scalar_term(alpha, -N11, 0, 0);
  if (delta) {
    c1.add_constant(-(*delta * *delta) * BB, 0, 0);
  } else {
    c1.add_scalar_term(*d, -BB, 0, 0);
  }
  c1.add_scalar_term(alpha, -N12, 0, n);
  c1.add_scalar_term(alpha, -N22, n, n);
  c1.add_term(X, B, I, 0, 2 * n);
  c1.add_term(Y, n, 2 * n);
  c1.add_term(Y, 2 * n, 2 * n);
  c1.add_term(X, 3 * n, 2 * n);
  c1.add_constant(MatrixXd::Identity(1, 1), 3 * n, 3 * n);

  auto& c2 = p.add_constraint(n + 1, "gain", true);
  c2.add_term(Y, 0, 0);
  c2.add_term(X, n, 0);
  c2.add_constant(MatrixXd::Identity(1, 1), n, n);

  if (d) p.maximize(*d);
  return p;
}

StabilizationCertificate extract(const sdp::SolveResult& r, const UncertaintyEllipsoid& ell, double delta) {
  StabilizationCertificate c;
  c.Y = symmetrize(r.matrix("Y"));
  c.X = r.matrix("X").row(0);
  c.alpha = r.scalar("alpha") / multiplier_scale(ell);
  c.beta = r.scalar("beta");
  c.delta = delta;
  c.derive();
  return c;
}

CertificateStatus map_infeasible(sdp::Status s, bool slater) {
  switch (s) {
    case sdp::Status::infeasible:
      return slater ? CertificateStatus::infeasible : CertificateStatus::inconclusive;
    case sdp::Status::unbounded:
      return CertificateStatus::unbounded;
    default:
      return CertificateStatus::numerical_failure;
  }
}

sdp::SolveResult solve_at(const UncertaintyEllipsoid& ell, const VectorXd& B, double delta,
                          const CertificateOptions& options) {
  return sdp::solve(build_lmi(ell, B, delta, options), options.solver);
}

}  // namespace

sdp::LmiProblem assemble_theorem1_lmi(const UncertaintyEllipsoid& ell, const VectorXd& B, double delta,
                                      const CertificateOptions& options) {
  return build_lmi(ell, B, delta, options);
}

sdp::LmiProblem assemble_density_lmi(const UncertaintyEllipsoid& ell, const VectorXd& B,
                                     const CertificateOptions& options) {
  return build_lmi(ell, B, std::nullopt, options);
}

FixedDensityOutcome solve_fixed_density(const UncertaintyEllipsoid& ell, const VectorXd& B, double delta,
                                        const CertificateOptions& options) {
  FixedDensityOutcome out;
  out.slater = slater_check(ell);
  const sdp::SolveResult r = solve_at(ell, B, delta, options);
  out.stats = r.stats;
  if (r.ok()) {
    out.status = CertificateStatus::feasible;
    out.certificate = extract(r, ell, delta);
    return out;
  }
  if (r.status != sdp::Status::numerical_failure) {
    out.status = map_infeasible(r.status, out.slater);
    return out;
  }

  // Ambiguous near the boundary: probe on both sides. Feasibility only gets
  // easier as delta shrinks, so a certificate at a larger delta is also one here,
  // and infeasibility at a smaller delta settles the question.
  out.probe.push_back({delta, r.status});
  for (double factor : {1.05, 0.95}) {
    const double probe_delta = factor * delta;
    if (!(probe_delta < 1.0)) continue;
    const sdp::SolveResult q = solve_at(ell, B, probe_delta, options);
    out.probe.push_back({probe_delta, q.status});
    if (factor > 1.0 && q.ok()) {
      out.status = CertificateStatus::feasible;
      out.certificate = extract(q, ell, delta);
      return out;
    }
    if (factor < 1.0 && q.status == sdp::Status::infeasible) {
      out.status = map_infeasible(q.status, out.slater);
      return out;
    }
  }

  // Noise-free data make the fixed-delta infeasibility problem degenerate, and
  // its interior-point runs can stall far from any decision. The density
  // problem shares every constraint and its value is accurate to the gap it
  // reaches; a feasible point at delta would give d = delta^2, so delta^2 well
  // above that value settles infeasibility.
  const sdp::SolveResult dens = sdp::solve(build_lmi(ell, B, std::nullopt, options), options.solver);
  const bool settled = dens.ok() && dens.stats.relative_gap < 1e-2 && dens.stats.primal_residual < 1e-3 &&
                       dens.stats.dual_residual < 1e-6;
  if (settled) {
    const double d_star = std::max(0.0, dens.scalar("d"));
    const double d_upper = d_star * (1.0 + 10.0 * std::max(dens.stats.relative_gap, 1e-6)) + 1e-9;
    out.probe.push_back({std::sqrt(d_star), dens.status});
    if (delta * delta > d_upper) {
      out.status = map_infeasible(sdp::Status::infeasible, out.slater);
      return out;
    }
  }
  out.status = CertificateStatus::numerical_failure;
  return out;
}

DensityOutcome maximize_density(const UncertaintyEllipsoid& ell, const VectorXd& B,
                                const CertificateOptions& options) {
  DensityOutcome out;
  out.slater = slater_check(ell);
  const sdp::SolveResult r = sdp::solve(build_lmi(ell, B, std::nullopt, options), options.solver);
  out.stats = r.stats;
  if (!r.ok()) {
    out.status = map_infeasible(r.status, out.slater);
    return out;
  }
  const double d = std::max(0.0, r.scalar("d"));
  const double delta_star = std::sqrt(d);
  // Nothing positive was certified: only the unquantized problem is solvable.
  if (!(delta_star * options.backoff * 0.95 > 0.0) || d < 1e-12) {
    out.status = out.slater ? CertificateStatus::infeasible : CertificateStatus::inconclusive;
    return out;
  }

  DensityResult res;
  res.delta_sq = d;
  res.delta_star = delta_star;
  res.rho_star = rho_from_delta(delta_star);

  // The optimum sits on the boundary; back off until a certificate with margin
  // is found. The probe records the status around delta_star.
  std::optional<StabilizationCertificate> cert;
  for (double factor : {options.backoff, 0.99, 0.95}) {
    const double delta = factor * delta_star;
    const sdp::SolveResult q = solve_at(ell, B, delta, options);
    out.probe.push_back({delta, q.status});
    if (q.ok()) {
      cert = extract(q, ell, delta);
      break;
    }
  }
  if (1.05 * delta_star < 1.0) {
    out.probe.push_back({1.05 * delta_star, solve_at(ell, B, 1.05 * delta_star, options).status});
  }
  if (!cert) {
    out.status = CertificateStatus::numerical_failure;
    return out;
  }
  res.certificate = *cert;
  out.result = res;
  out.status = CertificateStatus::feasible;
  return out;
}

double mahler_measure(const MatrixXd& A) {
  if (A.rows() != A.cols()) throw DimensionError("A must be square");
  double m = 1.0;
  const Eigen::VectorXcd ev = eigenvalues(A);
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    const double r = std::abs(ev(i));
    if (r > 1.0) m *= r;
  }
  return m;
}

namespace {

// Discrete-time bounded-real LMI: exists P > 0 with
// [A'PA - P + K'K, A'PB; B'PA, B'PB - g^2] < 0.
bool brl_feasible(const MatrixXd& Acl, const VectorXd& B, const RowVectorXd& K, double gamma,
                  const sdp::SolveOptions& solver) {
  const int n = static_cast<int>(Acl.rows());
  sdp::LmiProblem p;
  auto P = p.add_symmetric("P", n, sdp::Bound::positive());
  auto& c = p.add_constraint(n + 1, "bounded real", true);
  c.add_term(P, 0, 0);
  c.add_term(P, -Acl.transpose(), Acl, 0, 0);
  c.add_constant(-K.transpose() * K, 0, 0);
  c.add_term(P, -B.transpose(), Acl, n, 0);
  c.add_term(P, -B.transpose(), B, n, n);
  c.add_constant(MatrixXd::Constant(1, 1, gamma * gamma), n, n);
  return sdp::solve(p, solver).ok();
}

}  // namespace

double hinf_norm_bisection(const MatrixXd& A, const VectorXd& B, const RowVectorXd& K,
                           const BisectionOptions& options) {
  const int n = static_cast<int>(A.rows());
  require_shape(A, n, n, "A");
  require_shape(B, n, 1, "B");
  require_shape(K, 1, n, "K");
  const MatrixXd Acl = A + B * K;
  if (!(spectral_radius(Acl) < 1.0 - 1e-9)) throw HinfUndefined();
  if (K.isZero(0.0)) return 0.0;

  sdp::SolveOptions solver;
  solver.eps_margin = options.eps_margin;
  double lo = 1e-6;
  if (options.lower) {
    lo = *options.lower;
  } else if (spectral_radius(A) > 1.0) {
    lo = mahler_measure(A) * (1.0 - 1e-9);
  }
  double hi = std::max(1.0, 2.0 * lo);
  while (!brl_feasible(Acl, B, K, hi, solver)) {
    lo = hi;
    hi *= 2.0;
    if (hi > options.upper_cap) throw NumericalError("bounded-real bisection exceeded its upper bracket");
  }
  // Small norms would lose relative accuracy under a purely absolute width,
  // so the width also has to shrink below 1e-4 of the bracket.
  while (hi - lo > std::min(options.tolerance, 1e-4 * hi)) {
    const double mid = 0.5 * (lo + hi);
    if (brl_feasible(Acl, B, K, mid, solver)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

VerificationReport verify_certificate(const UncertaintyEllipsoid& ell, const VectorXd& B,
                                      const StabilizationCertificate& cert, int count, std::uint64_t seed,
                                      HinfMethod method, double tol) {
  VerificationReport rep;
  // Measured against P itself, the vertex eigenvalue is the per-step decay rate
  // of V(x) = x^T P x and does not depend on how P happens to be scaled.
  const Eigen::LLT<MatrixXd> p_chol(cert.P);
  if (p_chol.info() != Eigen::Success) throw NumericalError("certificate P is not positive definite");
  const MatrixXd L_inv = p_chol.matrixL().solve(MatrixXd::Identity(cert.P.rows(), cert.P.cols()));
  for (const MatrixXd& A : sample_members(ell, count, seed)) {
    ++rep.samples;
    if (!membership(ell, A)) ++rep.membership_failures;

    for (double sign : {-1.0, 1.0}) {
      const MatrixXd Av = A + (1.0 + sign * cert.delta) * B * cert.K;
      const double e = max_eigenvalue(symmetrize(L_inv * (Av.transpose() * cert.P * Av - cert.P) * L_inv.transpose()));
      rep.worst_vertex_eig = std::max(rep.worst_vertex_eig, e);
      if (!(e < -tol)) ++rep.vertex_violations;
    }

    double ratio = 0.0;
    try {
      const ClosedLoopSystem cl(LinearSystem(A, B), cert.K);
      const double gamma = method == HinfMethod::bisection ? hinf_norm_bisection(A, B, cert.K)
                                                           : frequency_response_norm(cl);
      ratio = gamma * cert.delta;
    } catch (const HinfUndefined&) {
      ratio = std::numeric_limits<double>::infinity();
    }
    rep.worst_hinf_ratio = std::max(rep.worst_hinf_ratio, ratio);
    if (!(ratio < 1.0 - tol)) ++rep.hinf_violations;
  }
  return rep;
}

}  // namespace quantstab
