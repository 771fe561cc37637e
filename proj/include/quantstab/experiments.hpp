#pragma once

// Monte Carlo sweeps over the noise level and over the looseness of the prior
// noise bound, each trial solving the coarsest-density problem on fresh data.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "quantstab/certificates.hpp"
#include "quantstab/linalg.hpp"
#include "quantstab/lti.hpp"

namespace quantstab {

enum class SystemSource { paper_fixed, random_uniform };

struct ExperimentConfig {
  int n = 3;
  int T = 20;
  int trials = 100;
  std::vector<double> omega_grid;
  std::vector<double> zeta_grid;
  /// Noise level held fixed in the prior sweep.
  double prior_omega = 0.005;
  SystemSource system_source = SystemSource::paper_fixed;
  std::uint64_t master_seed = 0;
  /// Worker threads; 0 means one per hardware thread.
  int threads = 0;
  /// Members of the uncertainty set each feasible certificate is checked on.
  int verify_samples = 10;
  CertificateOptions certificate;

  /// omega in {0} and 13 log-spaced points from 1e-3 to 1; zeta in {1, 2, 5, 10, 20, 35, 50}.
  static ExperimentConfig defaults();
  /// Throws std::invalid_argument on negative grid values, trials < 1 and the like.
  void validate() const;
};

std::vector<double> default_omega_grid();
std::vector<double> default_zeta_grid();

struct TrialOutcome {
  std::string status;
  std::optional<double> delta_sq;
  bool slater = false;
  bool noise_bound_holds = false;
  /// Present for feasible trials: whether the certificate passed the sampled check.
  std::optional<bool> verified;

  bool feasible() const { return delta_sq.has_value(); }
  bool operator==(const TrialOutcome&) const = default;
};

struct SweepRecord {
  double grid_value = 0.0;
  double feasible_fraction = 0.0;
  std::optional<double> mean_delta_sq;
  double slater_pass_fraction = 0.0;
  int trials = 0;
  std::vector<TrialOutcome> trial_outcomes;

  bool operator==(const SweepRecord&) const = default;
};

/// T noise vectors (columns), each uniform on the ball of squared radius omega.
MatrixXd sample_ball_noise(int n, double omega, int T, std::uint64_t seed);

/// Random A with entries uniform on [-1, 1] and spectral radius above 1, and B
/// uniform on [-1, 1]^n. Redraws at most 100 times; throws NumericalError after that.
LinearSystem draw_unstable_system(int n, std::uint64_t seed);

std::vector<SweepRecord> run_noise_sweep(const ExperimentConfig& cfg);
std::vector<SweepRecord> run_prior_sweep(const ExperimentConfig& cfg);

/// Writes `<path>` (CSV summary) and `<path>.json` (per-trial detail).
void emit_plot_data(const std::vector<SweepRecord>& records, const std::filesystem::path& path);
std::string records_to_csv(const std::vector<SweepRecord>& records);
nlohmann::json records_to_json(const std::vector<SweepRecord>& records);
std::vector<SweepRecord> records_from_json(const nlohmann::json& j);

}  // namespace quantstab
