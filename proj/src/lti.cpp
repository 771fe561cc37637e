#include "quantstab/lti.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

namespace quantstab {

void TrajectoryData::validate() const {
  const auto T = X_minus.cols();
  if (T < 1) throw DimensionError("trajectory needs at least one sample");
  if (X_plus.rows() != X_minus.rows() || X_plus.cols() != T) {
    throw DimensionError("X_plus and X_minus must have equal shape");
  }
  if (U.cols() != T || U.rows() < 1) throw DimensionError("U must have T columns");
  if (W && (W->rows() != X_minus.rows() || W->cols() != T)) {
    throw DimensionError("W must have the shape of X_minus");
  }
}

LinearSystem::LinearSystem(MatrixXd A, VectorXd B) : A_(std::move(A)), B_(std::move(B)) {
  if (A_.rows() == 0 || A_.rows() != A_.cols()) throw DimensionError("A must be square and non-empty");
  if (B_.rows() != A_.rows()) throw DimensionError("B must have n rows");
}

// ---------------------------------------------------------------------------

double delta_from_rho(double rho) { return (1.0 - rho) / (1.0 + rho); }
double rho_from_delta(double delta) { return (1.0 - delta) / (1.0 + delta); }

LogQuantizer::LogQuantizer(double rho, double u0) : rho_(rho), u0_(u0), delta_(delta_from_rho(rho)) {
  if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("quantizer density must lie in (0, 1)");
  if (!(u0 > 0.0) || !std::isfinite(u0)) throw std::invalid_argument("quantizer base level must be positive");
}

LogQuantizer LogQuantizer::from_delta(double delta, double u0) {
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("sector radius must lie in (0, 1)");
  return LogQuantizer(rho_from_delta(delta), u0);
}

double LogQuantizer::level(long i) const { return u0_ * std::pow(rho_, -static_cast<double>(i)); }

long LogQuantizer::level_index(double v) const {
  // Interval of level i: u_i / (1 + delta) < v <= u_i / (1 - delta).
  // Since u_i / (1 + delta) equals u_(i-1) / (1 - delta), one boundary function
  // serves both ends. Evaluating the two expressions separately can leave a gap
  // of one ulp that belongs to no level.
  // 1 / (1 - delta) is written as (1 + rho) / (2 rho) to avoid rounding delta first.
  auto upper = [&](long i) { return level(i) * (1.0 + rho_) / (2.0 * rho_); };
  auto below = [&](long i) { return v <= upper(i - 1); };  // v too small for i
  auto above = [&](long i) { return v > upper(i); };       // v too large for i
  long i = static_cast<long>(std::ceil(std::log(v * (1.0 - delta_) / u0_) / std::log(1.0 / rho_)));
  for (int guard = 0; guard < 8; ++guard) {
    if (below(i)) {
      --i;
    } else if (above(i)) {
      ++i;
    } else {
      return i;
    }
  }
  throw NumericalError("quantizer index fix-up did not settle");
}

double LogQuantizer::operator()(double v) const {
  if (v == 0.0 || !std::isfinite(v)) return v;
  if (v < 0.0) return -(*this)(-v);
  return level(level_index(v));
}

double quantize(const LogQuantizer& q, double v) { return q(v); }

// ---------------------------------------------------------------------------

ClosedLoopSystem::ClosedLoopSystem(LinearSystem sys, RowVectorXd gain, std::optional<LogQuantizer> q)
    : system(std::move(sys)), K(std::move(gain)), quantizer(q) {
  if (K.cols() != system.n()) throw DimensionError("gain K must have n columns");
}

TrajectoryData simulate_open_loop(const LinearSystem& sys, const VectorXd& x0,
                                  std::span<const double> inputs, const MatrixXd& noise) {
  const int n = sys.n();
  const auto T = static_cast<Eigen::Index>(inputs.size());
  if (T < 1) throw DimensionError("simulation horizon must be at least 1");
  require_shape(x0, n, 1, "x0");
  require_shape(noise, n, T, "noise");
  TrajectoryData d;
  d.X_minus.resize(n, T);
  d.X_plus.resize(n, T);
  d.U.resize(1, T);
  d.W = noise;
  VectorXd x = x0;
  for (Eigen::Index k = 0; k < T; ++k) {
    d.X_minus.col(k) = x;
    d.U(0, k) = inputs[static_cast<std::size_t>(k)];
    x = sys.A() * x + sys.B() * inputs[static_cast<std::size_t>(k)] + noise.col(k);
    d.X_plus.col(k) = x;
  }
  return d;
}

MatrixXd simulate_quantized_closed_loop(const ClosedLoopSystem& cl, const VectorXd& x0, int steps,
                                        const std::optional<MatrixXd>& noise) {
  if (!cl.quantizer) throw std::invalid_argument("closed loop has no quantizer");
  if (steps < 1) throw std::invalid_argument("steps must be at least 1");
  const int n = cl.system.n();
  require_shape(x0, n, 1, "x0");
  if (noise) require_shape(*noise, n, steps, "noise");
  MatrixXd states(n, steps + 1);
  states.col(0) = x0;
  for (int k = 0; k < steps; ++k) {
    const VectorXd x = states.col(k);
    const double u = (*cl.quantizer)(cl.K.dot(x));
    VectorXd next = cl.system.A() * x + cl.system.B() * u;
    if (noise) next += noise->col(k);
    states.col(k + 1) = next;
  }
  return states;
}

double frequency_response_magnitude(const ClosedLoopSystem& cl, double theta) {
  using Complex = std::complex<double>;
  Eigen::MatrixXcd M = -cl.matrix().cast<Complex>();
  M.diagonal().array() += std::polar(1.0, theta);
  const Eigen::VectorXcd x = M.partialPivLu().solve(cl.system.B().cast<Complex>());
  return std::abs((cl.K.cast<Complex>() * x)(0, 0));
}

namespace {

double golden_section_max(const ClosedLoopSystem& cl, double lo, double hi) {
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double fc = frequency_response_magnitude(cl, c);
  double fd = frequency_response_magnitude(cl, d);
  for (int it = 0; it < 200 && (b - a) > 1e-12; ++it) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = frequency_response_magnitude(cl, c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = frequency_response_magnitude(cl, d);
    }
  }
  return std::max({fc, fd, frequency_response_magnitude(cl, 0.5 * (a + b))});
}

}  // namespace

double frequency_response_norm(const ClosedLoopSystem& cl, int grid_size) {
  if (grid_size < 64) throw std::invalid_argument("frequency grid needs at least 64 points");
  if (spectral_radius(cl.matrix()) >= 1.0) throw HinfUndefined();
  if (cl.K.isZero(0.0)) return 0.0;

  const double pi = std::numbers::pi;
  std::vector<double> values(static_cast<std::size_t>(grid_size));
  for (int k = 0; k < grid_size; ++k) {
    values[static_cast<std::size_t>(k)] = frequency_response_magnitude(cl, pi * k / (grid_size - 1));
  }
  std::vector<int> peaks;
  for (int k = 0; k < grid_size; ++k) {
    const double v = values[static_cast<std::size_t>(k)];
    const bool left = k == 0 || v >= values[static_cast<std::size_t>(k - 1)];
    const bool right = k == grid_size - 1 || v >= values[static_cast<std::size_t>(k + 1)];
    if (left && right) peaks.push_back(k);
  }
  std::sort(peaks.begin(), peaks.end(), [&](int a, int b) {
    return values[static_cast<std::size_t>(a)] > values[static_cast<std::size_t>(b)];
  });
  double best = *std::max_element(values.begin(), values.end());
  const std::size_t refine = std::min<std::size_t>(peaks.size(), 8);
  for (std::size_t p = 0; p < refine; ++p) {
    const int k = peaks[p];
    const double lo = pi * std::max(0, k - 1) / (grid_size - 1);
    const double hi = pi * std::min(grid_size - 1, k + 1) / (grid_size - 1);
    best = std::max(best, golden_section_max(cl, lo, hi));
  }
  return best;
}

}  // namespace quantstab
