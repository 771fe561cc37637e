// Runs the ten acceptance criteria and prints one PASS/FAIL line for each.
// Exit status is 0 only when every criterion passes.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "quantstab/adversarial.hpp"
#include "quantstab/certificates.hpp"
#include "quantstab/data.hpp"
#include "quantstab/experiments.hpp"
#include "quantstab/fixtures.hpp"
#include "quantstab/lti.hpp"
#include "quantstab/random.hpp"

using namespace quantstab;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

struct Instance {
  LinearSystem sys;
  TrajectoryData data;
  NoiseBound bound;
  UncertaintyEllipsoid ell;
};

// Open-loop experiment with Gaussian initial state and inputs, plus noise
// drawn uniformly from the ball of squared radius omega.
Instance make_instance(const LinearSystem& sys, int T, double omega, std::uint64_t seed) {
  const int n = sys.n();
  std::normal_distribution<double> gauss;
  auto rng = keyed_engine(seed, {1});
  VectorXd x0(n);
  for (int i = 0; i < n; ++i) x0(i) = gauss(rng);
  std::vector<double> inputs(static_cast<std::size_t>(T));
  for (auto& u : inputs) u = gauss(rng);
  const MatrixXd W = omega > 0.0 ? sample_ball_noise(n, omega, T, derive_seed(seed, {2})) : MatrixXd::Zero(n, T);
  TrajectoryData data = simulate_open_loop(sys, x0, inputs, W);
  NoiseBound bound = omega > 0.0 ? NoiseBound::ball(omega, T, n) : NoiseBound::exact(T, n);
  UncertaintyEllipsoid ell = build_ellipsoid(data, sys.B(), bound);
  return {sys, std::move(data), std::move(bound), std::move(ell)};
}

// Random unstable system rescaled to spectral radius in [1.05, 1.5]. Raw draws
// reach radius 2.5, and twenty steps of that growth leave X_minus X_minus^T too
// ill-conditioned to tell a bounded uncertainty set from an unbounded one.
LinearSystem moderately_unstable(std::uint64_t seed) {
  const LinearSystem raw = draw_unstable_system(3, derive_seed(seed, {10}));
  auto rng = keyed_engine(seed, {11});
  const double target = std::uniform_real_distribution<double>(1.05, 1.5)(rng);
  return {raw.A() * (target / spectral_radius(raw.A())), raw.B()};
}

// --- 1 -----------------------------------------------------------------------

Verdict fixture_eigenvalues() {
  auto eigs = [](const MatrixXd& A) {
    Eigen::EigenSolver<MatrixXd> es(A);
    std::vector<double> re;
    for (int i = 0; i < 3; ++i) re.push_back(es.eigenvalues()(i).real());
    std::sort(re.begin(), re.end());
    return re;
  };
  const std::array<double, 3> published{-1.3228, 0.0528, 1.2910};
  const auto got = eigs(fixtures::benchmark_system().A());
  double worst = 0.0;
  for (int i = 0; i < 3; ++i) worst = std::max(worst, std::abs(got[i] - published[i]));
  const auto listed = eigs(fixtures::benchmark_system_as_listed().A());
  std::printf("  info: entry (3,2) as listed (0.735) gives eigenvalues %.4f %.4f %.4f\n", listed[0], listed[1],
              listed[2]);
  return {worst < 5e-3, fmt("eigenvalues %.4f %.4f %.4f, worst deviation %.1e", got[0], got[1], got[2], worst)};
}

// --- 2 -----------------------------------------------------------------------

Verdict exact_coarsest_density() {
  const auto sys = fixtures::benchmark_system();
  const Instance inst = make_instance(sys, 20, 0.0, 2024);
  if (data_rank(inst.data) != 3) return {false, "data not full rank"};
  const DensityOutcome res = maximize_density(inst.ell, sys.B());
  if (res.status != CertificateStatus::feasible || !res.result) return {false, "status " + to_string(res.status)};
  const double oracle = 1.0 / mahler_measure(sys.A());
  const double rel = std::abs(res.result->delta_star - oracle) / oracle;
  return {rel < 0.02, fmt("delta* = %.4f, oracle %.4f, relative error %.2e", res.result->delta_star, oracle, rel)};
}

// --- 3 and 10 ----------------------------------------------------------------

struct Certified {
  Instance inst;
  StabilizationCertificate cert;
};

std::vector<Certified> g_certified;

Verdict soundness_suite() {
  int feasible = 0;
  int other = 0;
  int failed = 0;
  int samples = 0;
  double worst_ratio = 0.0;
  double worst_vertex = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < 50; ++k) {
    const std::uint64_t seed = derive_seed(3, {static_cast<std::uint64_t>(k)});
    const LinearSystem sys = moderately_unstable(seed);
    // Alternate between noise-free and low-noise data.
    const Instance inst = make_instance(sys, 20, k % 2 == 0 ? 0.0 : 1e-4, seed);
    const DensityOutcome res = maximize_density(inst.ell, sys.B());
    if (res.status != CertificateStatus::feasible || !res.result) {
      ++other;
      continue;
    }
    ++feasible;
    const auto& cert = res.result->certificate;
    const VerificationReport rep =
        verify_certificate(inst.ell, sys.B(), cert, 50, derive_seed(seed, {20}), HinfMethod::bisection, 1e-6);
    samples += rep.samples;
    worst_ratio = std::max(worst_ratio, rep.worst_hinf_ratio);
    worst_vertex = std::max(worst_vertex, rep.worst_vertex_eig);
    if (!rep.passed() || rep.samples < 50) {
      ++failed;
      std::printf("  info: instance %d: delta %.6f, membership %d, hinf %d, vertex %d, gamma*delta %.6f\n", k,
                  cert.delta, rep.membership_failures, rep.hinf_violations, rep.vertex_violations,
                  rep.worst_hinf_ratio);
    }
    g_certified.push_back({inst, cert});
  }
  return {failed == 0 && feasible > 0,
          fmt("%d/50 feasible (%d other), %d sampled members, %d certificates with violations, worst gamma*delta "
              "%.4f, worst vertex eigenvalue %.2e",
              feasible, other, samples, failed, worst_ratio, worst_vertex)};
}

Verdict lyapunov_decrease() {
  if (g_certified.empty()) return {false, "no certificates from criterion 3"};
  int runs = 0;
  int violations = 0;
  int longest = 0;
  for (std::size_t c = 0; c < g_certified.size(); ++c) {
    const auto& [inst, cert] = g_certified[c];
    const ClosedLoopSystem cl(inst.sys, cert.K, LogQuantizer(cert.rho));
    auto rng = keyed_engine(10, {c});
    std::normal_distribution<double> gauss;
    for (int r = 0; r < 10; ++r) {
      ++runs;
      VectorXd x(inst.sys.n());
      for (auto& v : x) v = gauss(rng);
      double V = x.dot(cert.P * x);
      int k = 0;
      bool ok = true;
      while (x.norm() >= 1e-9) {
        if (++k > 100000) {
          ok = false;
          break;
        }
        const double u = cl.quantizer->operator()((cert.K * x)(0));
        x = inst.sys.A() * x + inst.sys.B() * u;
        const double next = x.dot(cert.P * x);
        if (!(next < V)) {
          ok = false;
          break;
        }
        V = next;
      }
      longest = std::max(longest, k);
      if (!ok) ++violations;
    }
  }
  return {violations == 0, fmt("%d runs from %zu certificates, %d violations, longest run %d steps", runs,
                               g_certified.size(), violations, longest)};
}

// --- 4 -----------------------------------------------------------------------

Verdict delta_monotonicity() {
  const std::array<double, 6> deltas{0.9, 0.7, 0.5, 0.4, 0.3, 0.2};
  int checked = 0;
  int violations = 0;
  for (int k = 0; k < 20; ++k) {
    const std::uint64_t seed = derive_seed(4, {static_cast<std::uint64_t>(k)});
    const LinearSystem sys = moderately_unstable(seed);
    const Instance inst = make_instance(sys, 20, k % 2 == 0 ? 1e-4 : 1e-3, seed);
    for (double d : deltas) {
      if (solve_fixed_density(inst.ell, sys.B(), d).status != CertificateStatus::feasible) continue;
      ++checked;
      if (solve_fixed_density(inst.ell, sys.B(), 0.5 * d).status != CertificateStatus::feasible) ++violations;
    }
  }
  return {violations == 0 && checked > 0,
          fmt("%d feasible (instance, delta) pairs checked at delta/2, %d violations", checked, violations)};
}

// --- 5 -----------------------------------------------------------------------

Verdict example1() {
  const auto ex = fixtures::example1();
  const UncertaintyEllipsoid ell = build_ellipsoid(ex.data, ex.B, ex.bound);
  bool members = true;
  for (double k : {0.0, 1.0, 1e3, 1e6}) {
    MatrixXd A = MatrixXd::Zero(2, 2);
    A(0, 1) = k;
    members = members && membership(ell, A);
  }
  const bool rank_ok = !rank_condition(ex.data);
  const auto w = build_witness(ell, ex.data, 1e3);
  const double radius = w ? spectral_radius(w->A_bar) : 0.0;
  const bool witness_ok = w && membership(ell, w->A_bar) && radius > 1e2;
  return {members && rank_ok && witness_ok,
          fmt("nilpotent family in set: %s, rank condition false: %s, witness spectral radius %.1f",
              members ? "yes" : "no", rank_ok ? "yes" : "no", radius)};
}

// --- 6 and 7 -----------------------------------------------------------------

// Non-increasing up to single-step rises of `allowance` (absolute for
// fractions, relative to the previous value for mean delta^2).
struct ShapeCheck {
  int fraction_violations = 0;
  int delta_violations = 0;
  double largest_fraction_rise = 0.0;
  double largest_delta_rise = 0.0;
};

ShapeCheck check_shape(const std::vector<SweepRecord>& recs) {
  ShapeCheck s;
  for (std::size_t i = 1; i < recs.size(); ++i) {
    const double rise = recs[i].feasible_fraction - recs[i - 1].feasible_fraction;
    s.largest_fraction_rise = std::max(s.largest_fraction_rise, rise);
    if (rise > 0.03 + 1e-12) ++s.fraction_violations;
    if (recs[i].mean_delta_sq && recs[i - 1].mean_delta_sq) {
      const double prev = *recs[i - 1].mean_delta_sq;
      const double rel = (*recs[i].mean_delta_sq - prev) / prev;
      s.largest_delta_rise = std::max(s.largest_delta_rise, rel);
      if (rel > 0.03) ++s.delta_violations;
    }
  }
  return s;
}

Verdict noise_sweep() {
  ExperimentConfig cfg = ExperimentConfig::defaults();
  cfg.master_seed = 6;
  cfg.trials = 100;
  const auto recs = run_noise_sweep(cfg);
  // The omega grid starts at 0; the first positive point is 1e-3.
  const double at_min = recs.at(1).feasible_fraction;
  const ShapeCheck s = check_shape(recs);
  int unverified = 0;
  for (const auto& r : recs)
    for (const auto& t : r.trial_outcomes)
      if (t.verified && !*t.verified) ++unverified;
  std::printf("  info: omega feasible_fraction mean_delta_sq\n");
  for (const auto& r : recs) {
    std::printf("  info: %-10.4g %.2f %s\n", r.grid_value, r.feasible_fraction,
                r.mean_delta_sq ? fmt("%.5f", *r.mean_delta_sq).c_str() : "-");
  }
  return {at_min >= 0.97 && s.fraction_violations == 0 && s.delta_violations == 0 && unverified == 0,
          fmt("fraction %.2f at omega=1e-3, largest rise in fraction %.2f, in mean delta^2 %.1f%%, %d certificates "
              "failed sampled verification",
              at_min, s.largest_fraction_rise, 100.0 * s.largest_delta_rise, unverified)};
}

Verdict prior_sweep() {
  ExperimentConfig cfg = ExperimentConfig::defaults();
  cfg.master_seed = 7;
  cfg.trials = 100;
  cfg.prior_omega = 0.005;
  const auto recs = run_prior_sweep(cfg);
  const ShapeCheck s = check_shape(recs);
  std::printf("  info: zeta feasible_fraction mean_delta_sq\n");
  for (const auto& r : recs) {
    std::printf("  info: %-6g %.2f %s\n", r.grid_value, r.feasible_fraction,
                r.mean_delta_sq ? fmt("%.5f", *r.mean_delta_sq).c_str() : "-");
  }
  return {s.fraction_violations == 0 && s.delta_violations == 0,
          fmt("fraction %.2f at zeta=1 and %.2f at zeta=50, largest rise in fraction %.2f, in mean delta^2 %.1f%%",
              recs.front().feasible_fraction, recs.back().feasible_fraction, s.largest_fraction_rise,
              100.0 * s.largest_delta_rise)};
}

// --- 8 -----------------------------------------------------------------------

Verdict oracle_agreement() {
  auto rng = keyed_engine(8, {});
  std::uniform_real_distribution<double> entry(-1.0, 1.0);
  int loops = 0;
  int disagreements = 0;
  double worst = 0.0;
  while (loops < 100) {
    const int n = 2 + loops % 3;
    MatrixXd A(n, n);
    VectorXd B(n);
    RowVectorXd K(n);
    for (auto& v : A.reshaped()) v = entry(rng);
    for (auto& v : B) v = entry(rng);
    for (auto& v : K) v = entry(rng);
    if (spectral_radius(A + B * K) > 0.95) continue;
    ++loops;
    const double bis = hinf_norm_bisection(A, B, K);
    const double freq = frequency_response_norm(ClosedLoopSystem(LinearSystem(A, B), K));
    const double rel = std::abs(bis - freq) / std::max(freq, 1e-12);
    worst = std::max(worst, rel);
    if (rel > 1e-3) ++disagreements;
  }
  return {disagreements == 0, fmt("100 loops, %d disagreements, worst relative difference %.2e", disagreements, worst)};
}

// --- 9 -----------------------------------------------------------------------

Verdict quantizer_properties() {
  int violations = 0;
  long checks = 0;
  for (double rho : {0.1, 0.5, 0.9}) {
    const LogQuantizer q(rho);
    auto rng = keyed_engine(9, {static_cast<std::uint64_t>(rho * 10)});
    std::uniform_real_distribution<double> exponent(-8.0, 8.0);
    std::bernoulli_distribution sign;
    for (int s = 0; s < 100000; ++s) {
      const double v = (sign(rng) ? -1.0 : 1.0) * std::pow(10.0, exponent(rng));
      const double f = q(v);
      // One rounding of slack for values sitting exactly on a level boundary.
      const bool sector = std::abs(f - v) <= q.delta() * std::abs(v) * (1.0 + 1e-14);
      const bool odd = q(-v) == -f;
      const bool idempotent = q(f) == f;
      checks += 3;
      if (!sector || !odd || !idempotent) ++violations;
    }
  }
  if (LogQuantizer(0.5)(0.0) != 0.0) ++violations;
  return {violations == 0, fmt("%ld checks over rho in {0.1, 0.5, 0.9}, %d violations", checks, violations)};
}

}  // namespace

int main() {
  using Clock = std::chrono::steady_clock;
  struct Criterion {
    int id;
    const char* name;
    double budget_seconds;
    std::function<Verdict()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "benchmark fixture eigenvalues", 1.0, fixture_eigenvalues},
      {2, "exact-data coarsest density", 10.0, exact_coarsest_density},
      {3, "certificate soundness on 50 random systems", 300.0, soundness_suite},
      {4, "feasibility is monotone in delta", 0.0, delta_monotonicity},
      {5, "rank-deficient example", 0.0, example1},
      {6, "noise sweep shape", 1800.0, noise_sweep},
      {7, "prior sweep shape", 1800.0, prior_sweep},
      {8, "H-infinity oracles agree", 0.0, oracle_agreement},
      {9, "quantizer properties", 0.0, quantizer_properties},
      {10, "Lyapunov decrease along quantized closed loops", 0.0, lyapunov_decrease},
  };
  // Criterion 10 reuses the certificates found by criterion 3, so run in order.
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = Clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(Clock::now() - start).count();
    if (c.budget_seconds > 0.0 && secs > c.budget_seconds) {
      v.pass = false;
      v.detail += fmt("; over the %.0f s budget", c.budget_seconds);
    }
    if (!v.pass) ++failures;
    std::printf("%s criterion %d: %s: %s (%.2f s)\n", v.pass ? "PASS" : "FAIL", c.id, c.name, v.detail.c_str(),
                secs);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
