#include "quantstab/experiments.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <stdexcept>
#include <thread>

#include "quantstab/data.hpp"
#include "quantstab/fixtures.hpp"
#include "quantstab/random.hpp"

namespace quantstab {

namespace {

// Stream labels, so the draws of one trial never depend on each other's count.
enum Stream : std::uint64_t { kSystem = 1, kInitial = 2, kInputs = 3, kNoise = 4, kVerify = 5 };

struct Trial {
  double omega = 0.0;
  double zeta = 1.0;
  int trial = 0;
};

TrialOutcome run_trial(const ExperimentConfig& cfg, const Trial& t) {
  TrialOutcome out;
  // Seeds depend on the trial index only, so every grid point sees the same
  // system, initial state, inputs and noise directions (common random numbers).
  const auto key = static_cast<std::uint64_t>(t.trial);
  try {
    const LinearSystem sys = cfg.system_source == SystemSource::paper_fixed
                                 ? fixtures::benchmark_system()
                                 : draw_unstable_system(cfg.n, derive_seed(cfg.master_seed, {key, kSystem}));
    const int n = sys.n();
    std::normal_distribution<double> gauss;
    auto init_rng = keyed_engine(cfg.master_seed, {key, kInitial});
    VectorXd x0(n);
    for (int i = 0; i < n; ++i) x0(i) = gauss(init_rng);
    auto input_rng = keyed_engine(cfg.master_seed, {key, kInputs});
    std::vector<double> inputs(static_cast<std::size_t>(cfg.T));
    for (auto& u : inputs) u = gauss(input_rng);
    const MatrixXd W = sample_ball_noise(n, t.omega, cfg.T, derive_seed(cfg.master_seed, {key, kNoise}));

    const TrajectoryData data = simulate_open_loop(sys, x0, inputs, W);
    const NoiseBound bound = NoiseBound::ball(t.omega, cfg.T, n, t.zeta);
    out.noise_bound_holds = bound.admits(W);
    const UncertaintyEllipsoid ell = build_ellipsoid(data, sys.B(), bound);
    const DensityOutcome res = maximize_density(ell, sys.B(), cfg.certificate);
    out.slater = res.slater;
    out.status = to_string(res.status);
    if (res.status == CertificateStatus::feasible && res.result) {
      out.delta_sq = res.result->delta_sq;
      try {
        const auto rep = verify_certificate(ell, sys.B(), res.result->certificate, cfg.verify_samples,
                                            derive_seed(cfg.master_seed, {key, kVerify}),
                                            HinfMethod::frequency_grid);
        out.verified = rep.passed();
      } catch (const std::exception&) {
        out.verified = false;
      }
    }
  } catch (const std::exception& e) {
    out.status = std::string("error: ") + e.what();
  }
  return out;
}

std::vector<SweepRecord> run_sweep(const ExperimentConfig& cfg, const std::vector<Trial>& points,
                                   const std::vector<double>& grid) {
  cfg.validate();
  const std::size_t per_point = static_cast<std::size_t>(cfg.trials);
  std::vector<Trial> jobs;
  jobs.reserve(points.size() * per_point);
  for (const auto& p : points) {
    for (int k = 0; k < cfg.trials; ++k) jobs.push_back({p.omega, p.zeta, k});
  }

  std::vector<TrialOutcome> results(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t j = next++; j < jobs.size(); j = next++) results[j] = run_trial(cfg, jobs[j]);
  };
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const unsigned threads = std::min<unsigned>(cfg.threads > 0 ? static_cast<unsigned>(cfg.threads) : hw,
                                              static_cast<unsigned>(jobs.size()));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
  }

  // Fold in (grid index, trial index) order.
  std::vector<SweepRecord> records;
  for (std::size_t g = 0; g < points.size(); ++g) {
    SweepRecord rec;
    rec.grid_value = grid[g];
    rec.trials = cfg.trials;
    int feasible = 0;
    int slater = 0;
    double sum = 0.0;
    for (std::size_t k = 0; k < per_point; ++k) {
      const TrialOutcome& o = results[g * per_point + k];
      rec.trial_outcomes.push_back(o);
      if (o.slater) ++slater;
      if (o.feasible()) {
        ++feasible;
        sum += *o.delta_sq;
      }
    }
    rec.feasible_fraction = static_cast<double>(feasible) / cfg.trials;
    rec.slater_pass_fraction = static_cast<double>(slater) / cfg.trials;
    if (feasible > 0) rec.mean_delta_sq = sum / feasible;
    records.push_back(std::move(rec));
  }
  return records;
}

std::string format10(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

std::vector<double> default_omega_grid() {
  std::vector<double> g{0.0};
  for (int k = 0; k <= 12; ++k) g.push_back(std::pow(10.0, -3.0 + 0.25 * k));
  return g;
}

std::vector<double> default_zeta_grid() { return {1, 2, 5, 10, 20, 35, 50}; }

ExperimentConfig ExperimentConfig::defaults() {
  ExperimentConfig c;
  c.omega_grid = default_omega_grid();
  c.zeta_grid = default_zeta_grid();
  return c;
}

void ExperimentConfig::validate() const {
  if (n < 1 || T < 1) throw std::invalid_argument("n and T must be positive");
  if (trials < 1) throw std::invalid_argument("trials must be at least 1");
  for (double w : omega_grid) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw std::invalid_argument("noise levels must be non-negative");
  }
  for (double z : zeta_grid) {
    if (!(z > 0.0) || !std::isfinite(z)) throw std::invalid_argument("inflation factors must be positive");
  }
  if (!(prior_omega >= 0.0)) throw std::invalid_argument("prior sweep noise level must be non-negative");
  if (verify_samples < 1) throw std::invalid_argument("verify_samples must be at least 1");
  if (system_source == SystemSource::paper_fixed && n != 3) {
    throw std::invalid_argument("the fixed benchmark system has n = 3");
  }
}

MatrixXd sample_ball_noise(int n, double omega, int T, std::uint64_t seed) {
  if (!(omega >= 0.0)) throw std::invalid_argument("omega must be non-negative");
  if (n < 1 || T < 1) throw DimensionError("n and T must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  MatrixXd W(n, T);
  for (int k = 0; k < T; ++k) {
    VectorXd dir(n);
    double norm = 0.0;
    while (!(norm > 1e-12)) {
      for (int i = 0; i < n; ++i) dir(i) = gauss(rng);
      norm = dir.norm();
    }
    const double radius = std::sqrt(omega) * std::pow(unit(rng), 1.0 / n);
    W.col(k) = radius * dir / norm;
  }
  return W;
}

LinearSystem draw_unstable_system(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> entry(-1.0, 1.0);
  for (int attempt = 0; attempt < 100; ++attempt) {
    MatrixXd A(n, n);
    VectorXd B(n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) A(i, j) = entry(rng);
    for (int i = 0; i < n; ++i) B(i) = entry(rng);
    if (spectral_radius(A) > 1.0) return {A, B};
  }
  throw NumericalError("no open-loop unstable system within 100 draws");
}

std::vector<SweepRecord> run_noise_sweep(const ExperimentConfig& cfg) {
  std::vector<Trial> points;
  for (double w : cfg.omega_grid) points.push_back({w, 1.0, 0});
  return run_sweep(cfg, points, cfg.omega_grid);
}

std::vector<SweepRecord> run_prior_sweep(const ExperimentConfig& cfg) {
  std::vector<Trial> points;
  for (double z : cfg.zeta_grid) points.push_back({cfg.prior_omega, z, 0});
  return run_sweep(cfg, points, cfg.zeta_grid);
}

std::string records_to_csv(const std::vector<SweepRecord>& records) {
  std::string out = "grid_value,feasible_fraction,mean_delta_sq,slater_pass_fraction,trials\n";
  for (const auto& r : records) {
    out += format10(r.grid_value) + "," + format10(r.feasible_fraction) + "," +
           (r.mean_delta_sq ? format10(*r.mean_delta_sq) : std::string()) + "," +
           format10(r.slater_pass_fraction) + "," + std::to_string(r.trials) + "\n";
  }
  return out;
}

nlohmann::json records_to_json(const std::vector<SweepRecord>& records) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : records) {
    nlohmann::json trials = nlohmann::json::array();
    for (const auto& t : r.trial_outcomes) {
      nlohmann::json jt{{"status", t.status},
                        {"slater", t.slater},
                        {"noise_bound_holds", t.noise_bound_holds},
                        {"delta_sq", nullptr},
                        {"verified", nullptr}};
      if (t.delta_sq) jt["delta_sq"] = *t.delta_sq;
      if (t.verified) jt["verified"] = *t.verified;
      trials.push_back(std::move(jt));
    }
    nlohmann::json jr{{"grid_value", r.grid_value},
                      {"feasible_fraction", r.feasible_fraction},
                      {"mean_delta_sq", nullptr},
                      {"slater_pass_fraction", r.slater_pass_fraction},
                      {"trials", r.trials},
                      {"trial_outcomes", std::move(trials)}};
    if (r.mean_delta_sq) jr["mean_delta_sq"] = *r.mean_delta_sq;
    arr.push_back(std::move(jr));
  }
  return nlohmann::json{{"records", std::move(arr)}};
}

std::vector<SweepRecord> records_from_json(const nlohmann::json& j) {
  std::vector<SweepRecord> out;
  for (const auto& jr : j.at("records")) {
    SweepRecord r;
    r.grid_value = jr.at("grid_value").get<double>();
    r.feasible_fraction = jr.at("feasible_fraction").get<double>();
    if (!jr.at("mean_delta_sq").is_null()) r.mean_delta_sq = jr.at("mean_delta_sq").get<double>();
    r.slater_pass_fraction = jr.at("slater_pass_fraction").get<double>();
    r.trials = jr.at("trials").get<int>();
    for (const auto& jt : jr.at("trial_outcomes")) {
      TrialOutcome t;
      t.status = jt.at("status").get<std::string>();
      t.slater = jt.at("slater").get<bool>();
      t.noise_bound_holds = jt.at("noise_bound_holds").get<bool>();
      if (!jt.at("delta_sq").is_null()) t.delta_sq = jt.at("delta_sq").get<double>();
      if (!jt.at("verified").is_null()) t.verified = jt.at("verified").get<bool>();
      r.trial_outcomes.push_back(std::move(t));
    }
    out.push_back(std::move(r));
  }
  return out;
}

void emit_plot_data(const std::vector<SweepRecord>& records, const std::filesystem::path& path) {
  if (records.empty()) throw std::invalid_argument("no records to write");
  {
    std::ofstream csv(path);
    if (!csv) throw std::runtime_error("cannot open " + path.string());
    csv << records_to_csv(records);
    if (!csv) throw std::runtime_error("failed writing " + path.string());
  }
  std::filesystem::path json_path = path;
  json_path += ".json";
  std::ofstream js(json_path);
  if (!js) throw std::runtime_error("cannot open " + json_path.string());
  js << records_to_json(records).dump(2) << "\n";
  if (!js) throw std::runtime_error("failed writing " + json_path.string());
}

}  // namespace quantstab
