#pragma once

// JSON encoding of the library's inputs and results. Matrices are nested
// row-major arrays; vectors may also be written as flat arrays.

#include <filesystem>
#include <optional>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "quantstab/adversarial.hpp"
#include "quantstab/certificates.hpp"
#include "quantstab/data.hpp"
#include "quantstab/lti.hpp"

namespace quantstab::io {

using nlohmann::json;

/// Malformed or inconsistent input document.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

json matrix_to_json(const MatrixXd& m);
/// Accepts a nested array, or a flat array read as a single row.
MatrixXd matrix_from_json(const json& j, const char* what);
/// Accepts a flat array, or a nested array with one row or one column.
VectorXd vector_from_json(const json& j, const char* what);

json to_json(const LinearSystem& sys);
LinearSystem system_from_json(const json& j);

json to_json(const TrajectoryData& data);
TrajectoryData data_from_json(const json& j);

json to_json(const NoiseBound& bound);
/// Full form {"Phi11", "Phi12", "Phi22"}, or {"ball_squared_radius": omega,
/// "zeta": optional, "T": optional} for the ball bound, or {"exact": true}.
/// n and T come from the data the bound belongs to.
NoiseBound noise_bound_from_json(const json& j, int n, int T);

json to_json(const StabilizationCertificate& cert);
StabilizationCertificate certificate_from_json(const json& j);

json to_json(const sdp::SolverStats& stats);
json to_json(const VerificationReport& rep);
json to_json(const InformativityReport& rep);
json to_json(const RankDeficiencyWitness& w);
json to_json(const FixedDensityOutcome& out);
json to_json(const DensityOutcome& out);

/// Data, input matrix and noise bound of one problem document:
/// {"data": ..., "B": ... or "system": {...}, "noise_bound": ...}.
struct Problem {
  TrajectoryData data;
  MatrixXd B;
  NoiseBound bound;
  std::optional<LinearSystem> system;
};

Problem problem_from_json(const json& j);
json to_json(const Problem& p);

json read_json_file(const std::filesystem::path& path);
/// Two-space indentation and a trailing newline.
void write_json_file(const json& j, const std::filesystem::path& path);

}  // namespace quantstab::io
