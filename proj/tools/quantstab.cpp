// quantstab: command-line front end.
//
// Exit codes: 0 success, 1 negative verdict (infeasible, not informative,
// verification failed), 2 usage or input error, 3 numerical failure.

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "quantstab/adversarial.hpp"
#include "quantstab/certificates.hpp"
#include "quantstab/experiments.hpp"
#include "quantstab/fixtures.hpp"
#include "quantstab/io.hpp"
#include "quantstab/lti.hpp"
#include "quantstab/random.hpp"

using namespace quantstab;
using io::json;

namespace {

enum Exit : int { kOk = 0, kNegative = 1, kUsage = 2, kNumerical = 3 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Settings {
  std::string in;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<double> eps_margin;
  std::optional<double> tol;

  // stabilize
  std::optional<double> delta;
  std::optional<double> rho;
  // simulate
  std::optional<int> horizon;
  std::optional<double> omega;
  // verify
  std::string cert;
  int samples = 50;
  std::string method = "bisection";
  // witness
  double k = 1e3;
  // sweeps
  std::optional<int> trials;
  bool paper_scale = false;
  std::optional<int> threads;
};

std::uint64_t resolve_seed(const Settings& s, std::optional<std::uint64_t> fallback = std::nullopt) {
  if (s.seed) return *s.seed;
  if (fallback) return *fallback;
  if (const char* env = std::getenv("QUANTSTAB_SEED")) {
    try {
      std::size_t used = 0;
      const std::string text(env);
      const auto v = std::stoull(text, &used);
      if (used != text.size()) throw std::invalid_argument("trailing characters");
      return v;
    } catch (const std::exception&) {
      throw UsageError("QUANTSTAB_SEED must be a non-negative integer");
    }
  }
  return 0;
}

json require_input(const Settings& s) {
  if (s.in.empty()) throw UsageError("--in is required for this subcommand");
  return io::read_json_file(s.in);
}

// The JSON goes to --out; "-" sends it to stdout instead of the summary.
void emit(const Settings& s, const json& result, const std::string& summary) {
  if (s.out == "-") {
    std::cout << result.dump(2) << "\n";
    return;
  }
  std::cout << summary;
  if (s.out.empty()) return;
  try {
    io::write_json_file(result, s.out);
  } catch (const std::runtime_error& e) {
    throw UsageError(e.what());
  }
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

CertificateOptions certificate_options(const Settings& s) {
  CertificateOptions o;
  if (s.eps_margin) o.solver.eps_margin = *s.eps_margin;
  return o;
}

int status_exit(CertificateStatus st) {
  switch (st) {
    case CertificateStatus::feasible:
      return kOk;
    case CertificateStatus::numerical_failure:
      return kNumerical;
    default:
      return kNegative;
  }
}

VectorXd single_input(const io::Problem& p) {
  if (p.B.cols() != 1) throw UsageError("synthesis needs a single-input system (B with one column)");
  return p.B.col(0);
}

// ---------------------------------------------------------------------------

int cmd_simulate(const Settings& s) {
  const json cfg = s.in.empty() ? json::object() : io::read_json_file(s.in);
  const LinearSystem sys = cfg.contains("system") ? io::system_from_json(cfg.at("system")) : fixtures::benchmark_system();
  const int n = sys.n();
  const int T = s.horizon.value_or(cfg.value("T", 20));
  const double omega = s.omega.value_or(cfg.value("omega", 0.0));
  const double zeta = cfg.value("zeta", 1.0);
  if (T < 1) throw UsageError("T must be at least 1");
  if (!(omega >= 0.0)) throw UsageError("omega must be non-negative");
  const std::uint64_t seed = resolve_seed(s);

  std::normal_distribution<double> gauss;
  VectorXd x0(n);
  if (cfg.contains("x0")) {
    x0 = io::vector_from_json(cfg.at("x0"), "x0");
  } else {
    auto rng = keyed_engine(seed, {2});
    for (int i = 0; i < n; ++i) x0(i) = gauss(rng);
  }
  std::vector<double> inputs(static_cast<std::size_t>(T));
  if (cfg.contains("inputs")) {
    const VectorXd u = io::vector_from_json(cfg.at("inputs"), "inputs");
    if (u.size() != T) throw UsageError("inputs must have T entries");
    for (int k = 0; k < T; ++k) inputs[static_cast<std::size_t>(k)] = u(k);
  } else {
    auto rng = keyed_engine(seed, {3});
    for (auto& u : inputs) u = gauss(rng);
  }
  const MatrixXd W = cfg.contains("noise") ? io::matrix_from_json(cfg.at("noise"), "noise")
                                           : sample_ball_noise(n, omega, T, derive_seed(seed, {4}));
  const TrajectoryData data = simulate_open_loop(sys, x0, inputs, W);

  json result{{"system", io::to_json(sys)},
              {"data", io::to_json(data)},
              {"noise_bound", {{"ball_squared_radius", omega}, {"zeta", zeta}, {"T", T}}}};
  std::string summary = "simulated " + std::to_string(T) + " steps of a " + std::to_string(n) +
                        "-state system, noise level " + fmt("%g", omega) + ", data rank " +
                        std::to_string(data_rank(data)) + "\n";

  if (cfg.contains("closed_loop")) {
    const json& cl = cfg.at("closed_loop");
    const RowVectorXd K = io::vector_from_json(cl.at("K"), "K").transpose();
    std::optional<LogQuantizer> q;
    if (cl.contains("rho")) q = LogQuantizer(cl.at("rho").get<double>());
    if (cl.contains("delta")) q = LogQuantizer::from_delta(cl.at("delta").get<double>());
    const int steps = cl.value("steps", 50);
    const VectorXd start = cl.contains("x0") ? io::vector_from_json(cl.at("x0"), "x0") : x0;
    const MatrixXd states = simulate_quantized_closed_loop(ClosedLoopSystem(sys, K, q), start, steps);
    result["closed_loop"] = {{"states", io::matrix_to_json(states)}};
    summary += "closed loop: |x(" + std::to_string(steps) + ")| = " + fmt("%.3e", states.col(steps).norm()) + "\n";
  }
  emit(s, result, summary);
  return kOk;
}

int cmd_check_data(const Settings& s) {
  const auto p = io::problem_from_json(require_input(s));
  const auto ell = build_ellipsoid(p.data, p.B, p.bound);
  const auto rep = informativity_report(p.data, ell);
  json result = io::to_json(rep);
  std::string summary = "rank " + std::to_string(rep.rank) + (rep.rank == rep.n ? " = " : " < ") +
                        std::to_string(rep.n) + "; Slater " + (rep.slater ? "holds" : "fails") +
                        "; uncertainty set " + (rep.sigma_bounded ? "bounded" : "unbounded") + "\n";
  if (rep.witness_spectral_radius) {
    summary += "witness member with spectral radius " + fmt("%.4g", *rep.witness_spectral_radius) + "\n";
  }
  summary += rep.informative() ? "data are informative\n" : "data are NOT informative\n";
  emit(s, result, summary);
  return rep.informative() ? kOk : kNegative;
}

int cmd_stabilize(const Settings& s) {
  const auto p = io::problem_from_json(require_input(s));
  const VectorXd B = single_input(p);
  const double delta = s.delta ? *s.delta : delta_from_rho(*s.rho);
  if (!(delta >= 0.0 && delta < 1.0)) throw UsageError("delta must lie in [0, 1) (rho in (0, 1])");
  const auto ell = build_ellipsoid(p.data, p.B, p.bound);
  const auto out = solve_fixed_density(ell, B, delta, certificate_options(s));
  json result = io::to_json(out);
  result["delta"] = delta;
  result["rho"] = rho_from_delta(delta);
  std::string summary = "delta = " + fmt("%.6g", delta) + " (rho = " + fmt("%.6g", rho_from_delta(delta)) +
                        "): " + to_string(out.status) + "\n";
  if (out.certificate) {
    summary += "K = [";
    for (int i = 0; i < out.certificate->K.size(); ++i) summary += (i ? ", " : "") + fmt("%.6g", out.certificate->K(i));
    summary += "]\n";
  }
  emit(s, result, summary);
  return status_exit(out.status);
}

int cmd_coarsest(const Settings& s) {
  const auto p = io::problem_from_json(require_input(s));
  const VectorXd B = single_input(p);
  const auto ell = build_ellipsoid(p.data, p.B, p.bound);
  const auto out = maximize_density(ell, B, certificate_options(s));
  json result = io::to_json(out);
  std::string summary = "coarsest density: " + to_string(out.status) + "\n";
  if (out.result) {
    summary += "delta* = " + fmt("%.6g", out.result->delta_star) + ", delta*^2 = " +
               fmt("%.6g", out.result->delta_sq) + ", rho* = " + fmt("%.6g", out.result->rho_star) + "\n";
  }
  if (p.system) {
    const double bound = 1.0 / mahler_measure(p.system->A());
    result["mahler_bound"] = bound;
    summary += "1 / Mahler measure of the true A = " + fmt("%.6g", bound) + "\n";
  }
  emit(s, result, summary);
  return status_exit(out.status);
}

int cmd_hinf(const Settings& s) {
  const json doc = require_input(s);
  const LinearSystem sys = io::system_from_json(doc.contains("system") ? doc.at("system") : doc);
  const json& kj = doc.contains("K") ? doc.at("K")
                   : (doc.contains("certificate") && doc.at("certificate").is_object())
                       ? doc.at("certificate").at("K")
                       : throw UsageError("input needs \"K\" or a certificate");
  const RowVectorXd K = io::vector_from_json(kj, "K").transpose();
  if (K.size() != sys.n()) throw UsageError("K must have n entries");
  BisectionOptions opt;
  if (s.tol) opt.tolerance = *s.tol;
  if (s.eps_margin) opt.eps_margin = *s.eps_margin;
  const double radius = spectral_radius(sys.A() + sys.B() * K);
  json result{{"spectral_radius", radius}, {"stable", radius < 1.0}, {"bisection", nullptr},
              {"frequency_response", nullptr}};
  try {
    const double bis = hinf_norm_bisection(sys.A(), sys.B(), K, opt);
    const double grid = frequency_response_norm(ClosedLoopSystem(sys, K));
    result["bisection"] = bis;
    result["frequency_response"] = grid;
    emit(s, result,
         "H-infinity norm: " + fmt("%.6g", bis) + " (bisection), " + fmt("%.6g", grid) + " (frequency response)\n");
    return kOk;
  } catch (const HinfUndefined& e) {
    result["stable"] = false;
    emit(s, result, std::string(e.what()) + " (spectral radius " + fmt("%.6g", radius) + ")\n");
    return kNegative;
  }
}

int cmd_verify(const Settings& s) {
  const json doc = require_input(s);
  const auto p = io::problem_from_json(doc);
  const VectorXd B = single_input(p);
  json cert_doc = s.cert.empty() ? doc : io::read_json_file(s.cert);
  if (cert_doc.contains("certificate")) cert_doc = cert_doc.at("certificate");
  if (cert_doc.is_null()) throw UsageError("the certificate file holds no certificate");
  const auto cert = io::certificate_from_json(cert_doc);
  if (cert.Y.rows() != p.data.n()) throw UsageError("certificate and data differ in dimension");
  if (s.samples < 1) throw UsageError("--samples must be at least 1");
  HinfMethod method = HinfMethod::bisection;
  if (s.method == "frequency") method = HinfMethod::frequency_grid;
  const auto ell = build_ellipsoid(p.data, p.B, p.bound);
  const auto rep = verify_certificate(ell, B, cert, s.samples, resolve_seed(s), method, s.tol.value_or(1e-6));
  const std::string summary = "checked " + std::to_string(rep.samples) + " members: " +
                              std::to_string(rep.hinf_violations) + " H-infinity violations, " +
                              std::to_string(rep.vertex_violations) + " vertex violations, worst gamma*delta " +
                              fmt("%.6g", rep.worst_hinf_ratio) + "\n" + (rep.passed() ? "PASSED\n" : "FAILED\n");
  emit(s, io::to_json(rep), summary);
  return rep.passed() ? kOk : kNegative;
}

int cmd_witness(const Settings& s) {
  const auto p = io::problem_from_json(require_input(s));
  const auto ell = build_ellipsoid(p.data, p.B, p.bound);
  const auto w = build_witness(ell, p.data, s.k);
  json result{{"full_rank", !w.has_value()}, {"witness", nullptr}};
  std::string summary;
  if (w) {
    result["witness"] = io::to_json(*w);
    result["witness"]["member"] = membership(ell, w->A_bar);
    summary = "rank " + std::to_string(w->rank) + " < " + std::to_string(p.data.n()) +
              "; member at k = " + fmt("%g", s.k) + " has spectral radius " +
              fmt("%.6g", spectral_radius(w->A_bar)) + "\n";
  } else {
    summary = "full-rank data: no witness\n";
  }
  emit(s, result, summary);
  return kOk;
}

ExperimentConfig sweep_config(const Settings& s) {
  ExperimentConfig cfg = ExperimentConfig::defaults();
  std::optional<std::uint64_t> file_seed;
  if (!s.in.empty()) {
    const json j = io::read_json_file(s.in);
    cfg.n = j.value("n", cfg.n);
    cfg.T = j.value("T", cfg.T);
    cfg.trials = j.value("trials", cfg.trials);
    if (j.contains("omega_grid")) cfg.omega_grid = j.at("omega_grid").get<std::vector<double>>();
    if (j.contains("zeta_grid")) cfg.zeta_grid = j.at("zeta_grid").get<std::vector<double>>();
    cfg.prior_omega = j.value("prior_omega", cfg.prior_omega);
    cfg.threads = j.value("threads", cfg.threads);
    cfg.verify_samples = j.value("verify_samples", cfg.verify_samples);
    if (j.contains("system_source")) {
      const auto src = j.at("system_source").get<std::string>();
      if (src == "paper-fixed") {
        cfg.system_source = SystemSource::paper_fixed;
      } else if (src == "random-uniform") {
        cfg.system_source = SystemSource::random_uniform;
      } else {
        throw UsageError("system_source must be paper-fixed or random-uniform");
      }
    }
    if (j.contains("master_seed")) file_seed = j.at("master_seed").get<std::uint64_t>();
  }
  if (s.paper_scale) cfg.trials = 1000;
  if (s.trials) cfg.trials = *s.trials;
  if (s.threads) cfg.threads = *s.threads;
  if (s.eps_margin) cfg.certificate.solver.eps_margin = *s.eps_margin;
  cfg.master_seed = resolve_seed(s, file_seed);
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return cfg;
}

int cmd_sweep(const Settings& s, bool prior) {
  const ExperimentConfig cfg = sweep_config(s);
  const auto records = prior ? run_prior_sweep(cfg) : run_noise_sweep(cfg);
  std::string summary = std::string(prior ? "zeta" : "omega") + "        feasible  mean delta^2  slater\n";
  for (const auto& r : records) {
    summary += fmt("%-12.4g ", r.grid_value) + fmt("%8.3f  ", r.feasible_fraction) +
               (r.mean_delta_sq ? fmt("%12.5g", *r.mean_delta_sq) : std::string("           -")) +
               fmt("  %6.3f\n", r.slater_pass_fraction);
  }
  if (s.out == "-") {
    std::cout << records_to_json(records).dump(2) << "\n";
  } else {
    std::cout << summary;
    if (!s.out.empty()) {
      try {
        emit_plot_data(records, s.out);
      } catch (const std::runtime_error& e) {
        throw UsageError(e.what());
      }
    }
  }
  return kOk;
}

int cmd_example1(const Settings& s) {
  const auto ex = fixtures::example1();
  const auto ell = build_ellipsoid(ex.data, ex.B, ex.bound);
  json members = json::array();
  bool all_members = true;
  std::string summary = "N11 = I, N12 = 0, N22 = diag(-2, 0)\n";
  for (double k : {0.0, 1.0, 1e3, 1e6}) {
    const bool in = membership(ell, (MatrixXd(2, 2) << 0, k, 0, 0).finished());
    all_members = all_members && in;
    members.push_back({{"k", k}, {"member", in}});
    summary += "A = [[0, " + fmt("%g", k) + "], [0, 0]] in the set: " + (in ? "yes" : "no") + "\n";
  }
  const bool rank_ok = rank_condition(ex.data);
  const auto w = build_witness(ell, ex.data, 1e3);
  const double radius = w ? spectral_radius(w->A_bar) : 0.0;
  const bool reproduced = all_members && !rank_ok && w && radius > 1e2 && membership(ell, w->A_bar);
  summary += std::string("rank condition: ") + (rank_ok ? "holds" : "fails") + "\n";
  summary += "witness at k = 1000: spectral radius " + fmt("%.6g", radius) + "\n";
  summary += reproduced ? "verdict reproduced: the data are not informative\n" : "verdict NOT reproduced\n";
  json result{{"N11", io::matrix_to_json(ell.N11)},
              {"N12", io::matrix_to_json(ell.N12)},
              {"N22", io::matrix_to_json(ell.N22)},
              {"nilpotent_members", members},
              {"rank_condition", rank_ok},
              {"informativity", io::to_json(informativity_report(ex.data, ell))},
              {"witness", w ? io::to_json(*w) : json(nullptr)},
              {"reproduced", reproduced}};
  emit(s, result, summary);
  // The verdict itself is negative: no controller can be certified from these
  // data. Failing to reproduce it could only come from the numerics.
  return reproduced ? kNegative : kNumerical;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Data-driven stabilization with logarithmically quantized feedback"};
  app.require_subcommand(1);
  Settings s;

  auto add_common = [&](CLI::App* sub, bool input_required) {
    auto* in = sub->add_option("--in", s.in, "input JSON file");
    if (input_required) in->required();
    in->check(CLI::ExistingFile);
    sub->add_option("--out", s.out, "output JSON path (\"-\" for stdout)");
    sub->add_option("--seed", s.seed, "master seed (default: $QUANTSTAB_SEED, else 0)");
    sub->add_option("--eps-margin", s.eps_margin, "margin for strict inequalities")->check(CLI::PositiveNumber);
    sub->add_option("--tol", s.tol, "verification / bisection tolerance")->check(CLI::PositiveNumber);
  };

  auto* simulate = app.add_subcommand("simulate", "generate a data set (optionally a quantized closed loop)");
  add_common(simulate, false);
  simulate->add_option("--T", s.horizon, "horizon");
  simulate->add_option("--omega", s.omega, "per-sample squared noise bound");

  auto* check = app.add_subcommand("check-data", "rank, Slater and informativity checks");
  add_common(check, true);

  auto* stabilize = app.add_subcommand("stabilize", "solve the synthesis LMI at a fixed density");
  add_common(stabilize, true);
  auto* opt_delta = stabilize->add_option("--delta", s.delta, "sector radius");
  auto* opt_rho = stabilize->add_option("--rho", s.rho, "quantization density");
  opt_delta->excludes(opt_rho);
  opt_rho->excludes(opt_delta);

  auto* coarsest = app.add_subcommand("coarsest", "maximize the sector radius");
  add_common(coarsest, true);

  auto* hinf = app.add_subcommand("hinf", "H-infinity norm of K (zI - A - BK)^-1 B");
  add_common(hinf, true);

  auto* verify = app.add_subcommand("verify", "re-check a saved certificate against saved data");
  add_common(verify, true);
  verify->add_option("--cert", s.cert, "certificate JSON (default: the \"certificate\" field of --in)")
      ->check(CLI::ExistingFile);
  verify->add_option("--samples", s.samples, "members of the uncertainty set to check");
  verify->add_option("--method", s.method, "H-infinity oracle")->check(CLI::IsMember({"bisection", "frequency"}));

  auto* witness = app.add_subcommand("witness", "unbounded-eigenvalue family for rank-deficient data");
  add_common(witness, true);
  witness->add_option("--k", s.k, "scale of the perturbation");

  auto* sweep_noise = app.add_subcommand("sweep-noise", "Monte Carlo sweep over the noise level");
  auto* sweep_prior = app.add_subcommand("sweep-prior", "Monte Carlo sweep over the prior inflation");
  for (auto* sub : {sweep_noise, sweep_prior}) {
    add_common(sub, false);
    auto* trials = sub->add_option("--trials", s.trials, "trials per grid point")->check(CLI::PositiveNumber);
    sub->add_flag("--paper-scale", s.paper_scale, "1000 trials per grid point")->excludes(trials);
    sub->add_option("--threads", s.threads, "worker threads (0: one per core)");
  }

  auto* example1 = app.add_subcommand("example1", "reproduce the rank-deficient example");
  add_common(example1, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }
  if (stabilize->parsed() && !s.delta && !s.rho) {
    std::cerr << "stabilize: one of --delta or --rho is required\n";
    return kUsage;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(s);
    if (check->parsed()) return cmd_check_data(s);
    if (stabilize->parsed()) return cmd_stabilize(s);
    if (coarsest->parsed()) return cmd_coarsest(s);
    if (hinf->parsed()) return cmd_hinf(s);
    if (verify->parsed()) return cmd_verify(s);
    if (witness->parsed()) return cmd_witness(s);
    if (sweep_noise->parsed()) return cmd_sweep(s, false);
    if (sweep_prior->parsed()) return cmd_sweep(s, true);
    if (example1->parsed()) return cmd_example1(s);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const io::InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kUsage;
  } catch (const json::exception& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kUsage;
  } catch (const DimensionError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  }
  return kUsage;
}
