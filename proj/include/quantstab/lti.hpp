#pragma once

// Discrete-time single-input LTI systems, the logarithmic quantizer and
// simulation of open-loop and quantized closed-loop trajectories.

#include <optional>
#include <span>
#include <stdexcept>

#include "quantstab/linalg.hpp"
#include "quantstab/trajectory.hpp"

namespace quantstab {

/// x(k+1) = A x(k) + B u(k) + w(k) with a scalar input.
class LinearSystem {
 public:
  LinearSystem(MatrixXd A, VectorXd B);

  const MatrixXd& A() const { return A_; }
  const VectorXd& B() const { return B_; }
  int n() const { return static_cast<int>(A_.rows()); }

 private:
  MatrixXd A_;
  VectorXd B_;
};

/// Logarithmic quantizer with levels u_i = u0 * rho^(-i), i ranging over all integers.
class LogQuantizer {
 public:
  explicit LogQuantizer(double rho, double u0 = 1.0);
  static LogQuantizer from_delta(double delta, double u0 = 1.0);

  double rho() const { return rho_; }
  double u0() const { return u0_; }
  /// Sector radius (1 - rho) / (1 + rho).
  double delta() const { return delta_; }
  double level(long i) const;
  /// Index of the level that v > 0 maps to.
  long level_index(double v) const;
  double operator()(double v) const;

 private:
  double rho_;
  double u0_;
  double delta_;
};

double quantize(const LogQuantizer& q, double v);

double delta_from_rho(double rho);
double rho_from_delta(double delta);

/// Raised when a closed loop is not Schur stable and an H-infinity norm is requested.
class HinfUndefined : public std::domain_error {
 public:
  HinfUndefined() : std::domain_error("H-infinity norm undefined: closed loop is not Schur stable") {}
};

struct ClosedLoopSystem {
  LinearSystem system;
  RowVectorXd K;
  std::optional<LogQuantizer> quantizer;

  ClosedLoopSystem(LinearSystem sys, RowVectorXd gain, std::optional<LogQuantizer> q = std::nullopt);
  MatrixXd matrix() const { return system.A() + system.B() * K; }
};

TrajectoryData simulate_open_loop(const LinearSystem& sys, const VectorXd& x0,
                                  std::span<const double> inputs, const MatrixXd& noise);

/// Iterates x(k+1) = A x(k) + B f(K x(k)) + w(k); returns the n x (steps+1) state history.
MatrixXd simulate_quantized_closed_loop(const ClosedLoopSystem& cl, const VectorXd& x0, int steps,
                                        const std::optional<MatrixXd>& noise = std::nullopt);

/// sup over the unit circle of |K (zI - A - BK)^-1 B|, from a uniform grid on [0, pi]
/// refined by golden-section search around the local maxima.
double frequency_response_norm(const ClosedLoopSystem& cl, int grid_size = 4096);

/// |K (e^{j theta} I - A_cl)^-1 B|.
double frequency_response_magnitude(const ClosedLoopSystem& cl, double theta);

}  // namespace quantstab
