#include "quantstab/io.hpp"

#include <fstream>
#include <string>

namespace quantstab::io {

namespace {

const json& field(const json& j, const char* key, const char* where) {
  if (!j.is_object() || !j.contains(key)) {
    throw InputError(std::string(where) + ": missing field \"" + key + "\"");
  }
  return j.at(key);
}

double number(const json& j, const char* what) {
  if (!j.is_number()) throw InputError(std::string(what) + ": expected a number");
  return j.get<double>();
}

json probe_to_json(const std::vector<ProbePoint>& probe) {
  json arr = json::array();
  for (const auto& p : probe) arr.push_back({{"delta", p.delta}, {"status", sdp::to_string(p.status)}});
  return arr;
}

}  // namespace

json matrix_to_json(const MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

MatrixXd matrix_from_json(const json& j, const char* what) {
  if (!j.is_array() || j.empty()) throw InputError(std::string(what) + ": expected a non-empty array");
  if (!j.front().is_array()) {
    MatrixXd m(1, static_cast<Eigen::Index>(j.size()));
    for (std::size_t c = 0; c < j.size(); ++c) m(0, static_cast<Eigen::Index>(c)) = number(j[c], what);
    return m;
  }
  const std::size_t cols = j.front().size();
  MatrixXd m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < j.size(); ++r) {
    if (!j[r].is_array() || j[r].size() != cols) throw InputError(std::string(what) + ": ragged rows");
    for (std::size_t c = 0; c < cols; ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = number(j[r][c], what);
    }
  }
  return m;
}

VectorXd vector_from_json(const json& j, const char* what) {
  const MatrixXd m = matrix_from_json(j, what);
  if (m.rows() == 1) return m.row(0).transpose();
  if (m.cols() == 1) return m.col(0);
  throw InputError(std::string(what) + ": expected a vector");
}

json to_json(const LinearSystem& sys) {
  return {{"A", matrix_to_json(sys.A())}, {"B", matrix_to_json(sys.B())}};
}

LinearSystem system_from_json(const json& j) {
  try {
    return {matrix_from_json(field(j, "A", "system"), "A"), vector_from_json(field(j, "B", "system"), "B")};
  } catch (const DimensionError& e) {
    throw InputError(std::string("system: ") + e.what());
  }
}

json to_json(const TrajectoryData& data) {
  json j{{"X_minus", matrix_to_json(data.X_minus)},
         {"U", matrix_to_json(data.U)},
         {"X_plus", matrix_to_json(data.X_plus)}};
  if (data.W) j["W"] = matrix_to_json(*data.W);
  return j;
}

TrajectoryData data_from_json(const json& j) {
  TrajectoryData d;
  d.X_minus = matrix_from_json(field(j, "X_minus", "data"), "X_minus");
  d.U = matrix_from_json(field(j, "U", "data"), "U");
  d.X_plus = matrix_from_json(field(j, "X_plus", "data"), "X_plus");
  if (j.contains("W") && !j.at("W").is_null()) d.W = matrix_from_json(j.at("W"), "W");
  try {
    d.validate();
    if (d.X_plus.rows() != d.X_minus.rows()) throw DimensionError("X_plus and X_minus differ in rows");
  } catch (const DimensionError& e) {
    throw InputError(std::string("data: ") + e.what());
  }
  return d;
}

json to_json(const NoiseBound& bound) {
  return {{"Phi11", matrix_to_json(bound.Phi11)},
          {"Phi12", matrix_to_json(bound.Phi12)},
          {"Phi22", matrix_to_json(bound.Phi22)}};
}

NoiseBound noise_bound_from_json(const json& j, int n, int T) {
  if (!j.is_object()) throw InputError("noise_bound: expected an object");
  if (j.contains("T") && j.at("T").get<int>() != T) {
    throw InputError("noise_bound: T does not match the data horizon");
  }
  NoiseBound b;
  if (j.value("exact", false)) {
    b = NoiseBound::exact(T, n);
  } else if (j.contains("ball_squared_radius")) {
    const double omega = number(j.at("ball_squared_radius"), "ball_squared_radius");
    const double zeta = j.contains("zeta") ? number(j.at("zeta"), "zeta") : 1.0;
    if (!(omega >= 0.0) || !(zeta > 0.0)) throw InputError("noise_bound: need omega >= 0 and zeta > 0");
    b = NoiseBound::ball(omega, T, n, zeta);
  } else {
    b.Phi11 = matrix_from_json(field(j, "Phi11", "noise_bound"), "Phi11");
    b.Phi12 = matrix_from_json(field(j, "Phi12", "noise_bound"), "Phi12");
    b.Phi22 = matrix_from_json(field(j, "Phi22", "noise_bound"), "Phi22");
  }
  try {
    b.validate();
    if (b.n() != n || b.horizon() != T) throw DimensionError("noise bound does not match the data");
  } catch (const std::exception& e) {
    throw InputError(std::string("noise_bound: ") + e.what());
  }
  return b;
}

json to_json(const StabilizationCertificate& cert) {
  return {{"Y", matrix_to_json(cert.Y)}, {"X", matrix_to_json(cert.X)},   {"K", matrix_to_json(cert.K)},
          {"alpha", cert.alpha},         {"beta", cert.beta},              {"delta", cert.delta},
          {"rho", cert.rho}};
}

StabilizationCertificate certificate_from_json(const json& j) {
  StabilizationCertificate c;
  c.Y = matrix_from_json(field(j, "Y", "certificate"), "Y");
  c.X = vector_from_json(field(j, "X", "certificate"), "X").transpose();
  c.delta = number(field(j, "delta", "certificate"), "delta");
  c.alpha = j.contains("alpha") ? number(j.at("alpha"), "alpha") : 0.0;
  c.beta = j.contains("beta") ? number(j.at("beta"), "beta") : 0.0;
  if (c.Y.rows() != c.Y.cols() || c.X.cols() != c.Y.rows()) throw InputError("certificate: Y and X disagree in size");
  if (!(c.delta >= 0.0 && c.delta < 1.0)) throw InputError("certificate: delta must lie in [0, 1)");
  try {
    c.derive();
  } catch (const std::exception& e) {
    throw InputError(std::string("certificate: ") + e.what());
  }
  return c;
}

json to_json(const sdp::SolverStats& s) {
  return {{"iterations", s.iterations},
          {"primal_residual", s.primal_residual},
          {"dual_residual", s.dual_residual},
          {"relative_gap", s.relative_gap},
          {"phase_one_margin", s.phase_one_margin},
          {"min_slack", s.min_slack},
          {"message", s.message}};
}

json to_json(const VerificationReport& r) {
  return {{"passed", r.passed()},
          {"samples", r.samples},
          {"membership_failures", r.membership_failures},
          {"hinf_violations", r.hinf_violations},
          {"vertex_violations", r.vertex_violations},
          {"worst_hinf_ratio", r.worst_hinf_ratio},
          {"worst_vertex_eig", r.worst_vertex_eig}};
}

json to_json(const InformativityReport& r) {
  json j{{"n", r.n},
         {"rank", r.rank},
         {"rank_condition", r.rank == r.n},
         {"positive_eigenvalues", r.positive_eigenvalues},
         {"slater", r.slater},
         {"sigma_bounded", r.sigma_bounded},
         {"kernel_inclusion", r.kernel_inclusion},
         {"informative", r.informative()},
         {"witness_spectral_radius", nullptr}};
  if (r.witness_spectral_radius) j["witness_spectral_radius"] = *r.witness_spectral_radius;
  return j;
}

json to_json(const RankDeficiencyWitness& w) {
  return {{"rank", w.rank},
          {"E", matrix_to_json(w.E)},
          {"Lambda", matrix_to_json(w.Lambda)},
          {"A0", matrix_to_json(w.A0)},
          {"direction", matrix_to_json(w.direction)},
          {"k", w.k_scale},
          {"A_bar", matrix_to_json(w.A_bar)},
          {"spectral_radius", spectral_radius(w.A_bar)}};
}

json to_json(const FixedDensityOutcome& out) {
  json j{{"status", to_string(out.status)},
         {"slater", out.slater},
         {"certificate", nullptr},
         {"solver", to_json(out.stats)},
         {"probe", probe_to_json(out.probe)}};
  if (out.certificate) j["certificate"] = to_json(*out.certificate);
  return j;
}

json to_json(const DensityOutcome& out) {
  json j{{"status", to_string(out.status)},
         {"slater", out.slater},
         {"delta_star", nullptr},
         {"delta_sq", nullptr},
         {"rho_star", nullptr},
         {"certificate", nullptr},
         {"solver", to_json(out.stats)},
         {"probe", probe_to_json(out.probe)}};
  if (out.result) {
    j["delta_star"] = out.result->delta_star;
    j["delta_sq"] = out.result->delta_sq;
    j["rho_star"] = out.result->rho_star;
    j["certificate"] = to_json(out.result->certificate);
  }
  return j;
}

Problem problem_from_json(const json& j) {
  Problem p;
  p.data = data_from_json(field(j, "data", "problem"));
  if (j.contains("system")) p.system = system_from_json(j.at("system"));
  if (j.contains("B")) {
    const MatrixXd B = matrix_from_json(j.at("B"), "B");
    // A flat array is a column vector here, not a row.
    p.B = (!j.at("B").front().is_array()) ? MatrixXd(B.transpose()) : B;
  } else if (p.system) {
    p.B = p.system->B();
  } else {
    throw InputError("problem: need \"B\" or \"system\"");
  }
  if (p.B.rows() != p.data.n()) throw InputError("problem: B has the wrong number of rows");
  if (p.data.U.rows() != p.B.cols()) throw InputError("problem: U and B disagree on the input count");
  const json nb = j.contains("noise_bound") ? j.at("noise_bound") : json{{"exact", true}};
  p.bound = noise_bound_from_json(nb, p.data.n(), p.data.horizon());
  return p;
}

json to_json(const Problem& p) {
  json j{{"data", to_json(p.data)}, {"B", matrix_to_json(p.B)}, {"noise_bound", to_json(p.bound)}};
  if (p.system) j["system"] = to_json(*p.system);
  return j;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

void write_json_file(const json& j, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << j.dump(2) << "\n";
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace quantstab::io
