#pragma once

// Synthesis of quantized state feedback from data: the LMI at a fixed sector
// radius, the coarsest-density SDP, and two H-infinity oracles used to check
// the resulting controllers.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "quantstab/data.hpp"
#include "quantstab/linalg.hpp"
#include "quantstab/sdp.hpp"

namespace quantstab {

struct CertificateOptions {
  sdp::SolveOptions solver;
  /// Y <= y_cap * ||B||^2 * I. The coarsest-density supremum is not attained for
  /// noise-free data, so some cap on the Lyapunov matrix is needed to keep the
  /// problem bounded; it costs well under one percent of delta on the fixtures.
  double y_cap = 1e3;
  /// Upper bound on alpha * ||N||. Noise-free data push the multiplier to
  /// infinity as delta approaches its supremum; at 1e6 the loss is about 0.1%.
  double alpha_cap = 1e6;
  /// delta never exceeds 1 - delta_cap_gap (rho must stay positive).
  double delta_cap_gap = 1e-6;
  /// The final certificate is re-solved at backoff * delta_star.
  double backoff = 0.999;
};

enum class CertificateStatus {
  feasible,
  infeasible,
  /// The LMI is infeasible but the data fail the generalized Slater check, so
  /// infeasibility does not rule out a quantized stabilizer.
  inconclusive,
  unbounded,
  numerical_failure,
};

std::string to_string(CertificateStatus s);

struct StabilizationCertificate {
  MatrixXd Y;
  RowVectorXd X;
  double alpha = 0.0;
  double beta = 0.0;
  double delta = 0.0;
  RowVectorXd K;
  double rho = 0.0;
  MatrixXd P;
  MatrixXd Z;

  /// Fills K, rho, P and Z from Y, X and delta.
  void derive();
};

/// One point of the three-point probe around a density.
struct ProbePoint {
  double delta = 0.0;
  sdp::Status status = sdp::Status::numerical_failure;
};

struct FixedDensityOutcome {
  CertificateStatus status = CertificateStatus::numerical_failure;
  std::optional<StabilizationCertificate> certificate;
  bool slater = false;
  sdp::SolverStats stats;
  std::vector<ProbePoint> probe;
};

struct DensityResult {
  double delta_star = 0.0;
  double delta_sq = 0.0;
  double rho_star = 0.0;
  StabilizationCertificate certificate;
};

struct DensityOutcome {
  CertificateStatus status = CertificateStatus::numerical_failure;
  std::optional<DensityResult> result;
  bool slater = false;
  sdp::SolverStats stats;
  std::vector<ProbePoint> probe;
};

/// Robust synthesis LMI at a fixed delta. Variables Y, X, alpha, beta; constraint
/// "theorem1" of size 3n+1 and constraint "gain" of size n+1.
sdp::LmiProblem assemble_theorem1_lmi(const UncertaintyEllipsoid& ell, const VectorXd& B, double delta,
                                      const CertificateOptions& options = {});
/// Same LMI with d = delta^2 as an extra scalar variable, maximized.
sdp::LmiProblem assemble_density_lmi(const UncertaintyEllipsoid& ell, const VectorXd& B,
                                     const CertificateOptions& options = {});

FixedDensityOutcome solve_fixed_density(const UncertaintyEllipsoid& ell, const VectorXd& B, double delta,
                                        const CertificateOptions& options = {});
DensityOutcome maximize_density(const UncertaintyEllipsoid& ell, const VectorXd& B,
                                const CertificateOptions& options = {});

/// Product of |lambda| over eigenvalues outside the unit circle (1 if none).
double mahler_measure(const MatrixXd& A);

struct BisectionOptions {
  double tolerance = 1e-4;
  double eps_margin = 1e-9;
  /// Lower bracket; when absent, mahler_measure(A) is used if A is unstable.
  std::optional<double> lower;
  double upper_cap = 1e8;
};

/// H-infinity norm of K (zI - A - BK)^-1 B by bisection on the bounded-real LMI.
/// Throws HinfUndefined when A + BK is not Schur stable.
double hinf_norm_bisection(const MatrixXd& A, const VectorXd& B, const RowVectorXd& K,
                           const BisectionOptions& options = {});

enum class HinfMethod { bisection, frequency_grid };

struct VerificationReport {
  int samples = 0;
  int membership_failures = 0;
  int hinf_violations = 0;
  int vertex_violations = 0;
  /// max over samples of gamma * delta (must stay below 1).
  double worst_hinf_ratio = 0.0;
  /// max over samples and both vertices of the largest eigenvalue of
  /// A_v^T P A_v - P relative to P, so V(x+) <= (1 + worst_vertex_eig) V(x)
  /// (must stay negative).
  double worst_vertex_eig = -1.0;
  bool passed() const {
    return samples > 0 && membership_failures == 0 && hinf_violations == 0 && vertex_violations == 0;
  }
};

/// Checks a certificate against `count` sampled members of the uncertainty set:
/// H-infinity norm below 1/delta and the two vertex Lyapunov inequalities with P = Y^-1.
VerificationReport verify_certificate(const UncertaintyEllipsoid& ell, const VectorXd& B,
                                      const StabilizationCertificate& cert, int count, std::uint64_t seed,
                                      HinfMethod method = HinfMethod::bisection, double tol = 1e-6);

}  // namespace quantstab
