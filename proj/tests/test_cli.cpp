#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "quantstab/lti.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kCli = QUANTSTAB_CLI_PATH;
const fs::path kData = QUANTSTAB_DATA_DIR;

struct Scratch {
  fs::path dir;
  Scratch() : dir(fs::temp_directory_path() / ("quantstab_cli_" + std::to_string(::getpid()))) {
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
  fs::path operator/(const std::string& name) const { return dir / name; }
};

int run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " " + kCli.string() + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json load(const fs::path& p) { return json::parse(slurp(p)); }

std::string exact17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

TEST_CASE("check-data on Example 1 reports rank 1 < 2 and exits 1") {
  Scratch s;
  CHECK(run("check-data --in " + (kData / "example1.json").string() + " --out " + (s / "r.json").string()) == 1);
  const json r = load(s / "r.json");
  CHECK(r["rank"] == 1);
  CHECK(r["n"] == 2);
  CHECK(r["informative"] == false);
  CHECK(r["sigma_bounded"] == false);
}

TEST_CASE("example1 reproduces the negative verdict") {
  Scratch s;
  CHECK(run("example1 --out " + (s / "e.json").string()) == 1);
  const json r = load(s / "e.json");
  CHECK(r["reproduced"] == true);
  CHECK(r["rank_condition"] == false);
  for (const auto& m : r["nilpotent_members"]) CHECK(m["member"] == true);
  CHECK(r["witness"]["spectral_radius"].get<double>() > 1e2);
}

TEST_CASE("exact benchmark data: coarsest, stabilize, verify, hinf") {
  Scratch s;
  const auto bench = (s / "bench.json").string();
  REQUIRE(run("simulate --seed 3 --out " + bench) == 0);

  REQUIRE(run("coarsest --in " + bench + " --out " + (s / "c.json").string()) == 0);
  const json c = load(s / "c.json");
  CHECK(c["status"] == "feasible");
  CHECK(c["delta_star"].get<double>() == doctest::Approx(0.5856).epsilon(0.02));

  REQUIRE(run("stabilize --in " + bench + " --rho 0.9 --out " + (s / "rho.json").string()) == 0);
  const json st = load(s / "rho.json");
  CHECK(st["status"] == "feasible");
  CHECK(st["delta"].get<double>() == doctest::Approx(0.1 / 1.9));

  const std::string delta = exact17(quantstab::delta_from_rho(0.9));
  REQUIRE(run("stabilize --in " + bench + " --delta " + delta + " --out " + (s / "delta.json").string()) == 0);
  CHECK(slurp(s / "rho.json") == slurp(s / "delta.json"));

  CHECK(run("verify --in " + bench + " --cert " + (s / "rho.json").string()) == 0);
  CHECK(run("verify --in " + bench + " --cert " + (s / "c.json").string() + " --method frequency --samples 10") ==
        0);

  json h{{"system", load(bench)["system"]}, {"K", st["certificate"]["K"]}};
  std::ofstream(s / "h.json") << h.dump();
  CHECK(run("hinf --in " + (s / "h.json").string() + " --out " + (s / "hr.json").string()) == 0);
  const json hr = load(s / "hr.json");
  CHECK(hr["bisection"].get<double>() == doctest::Approx(hr["frequency_response"].get<double>()).epsilon(1e-3));
  CHECK(hr["bisection"].get<double>() < 1.9 / 0.1);

  CHECK(run("stabilize --in " + bench + " --delta 0.99") == 1);
}

TEST_CASE("a certificate that is too coarse fails verification") {
  Scratch s;
  const auto bench = (s / "bench.json").string();
  REQUIRE(run("simulate --seed 4 --out " + bench) == 0);
  REQUIRE(run("stabilize --in " + bench + " --delta 0.2 --out " + (s / "c.json").string()) == 0);
  json c = load(s / "c.json");
  // Claiming a coarser quantizer than the LMI was solved for breaks the vertex checks.
  c["certificate"]["delta"] = 0.9;
  std::ofstream(s / "bad.json") << c.dump();
  CHECK(run("verify --in " + bench + " --cert " + (s / "bad.json").string()) == 1);
}

TEST_CASE("unstable closed loop: hinf exits 1") {
  Scratch s;
  std::ofstream(s / "h.json") << R"({"system": {"A": [[2.0]], "B": [1.0]}, "K": [0.5]})";
  CHECK(run("hinf --in " + (s / "h.json").string()) == 1);
}

TEST_CASE("usage errors exit 2") {
  Scratch s;
  CHECK(run("") == 2);
  CHECK(run("no-such-command") == 2);
  CHECK(run("stabilize --in " + (kData / "example1.json").string()) == 2);
  CHECK(run("check-data --in " + (s / "missing.json").string()) == 2);
  std::ofstream(s / "garbage.json") << "{ not json";
  CHECK(run("check-data --in " + (s / "garbage.json").string()) == 2);
  // Two inputs: synthesis refuses.
  CHECK(run("coarsest --in " + (kData / "example1.json").string()) == 2);
  CHECK(run("sweep-noise --trials 0") == 2);
  CHECK(run("sweep-noise --trials 3 --paper-scale") == 2);
  CHECK(run("simulate", "QUANTSTAB_SEED=abc") == 2);
  CHECK(run("--help") == 0);
}

TEST_CASE("outputs are byte-identical across runs; the seed comes from the environment") {
  Scratch s;
  REQUIRE(run("simulate --out " + (s / "a.json").string(), "QUANTSTAB_SEED=17") == 0);
  REQUIRE(run("simulate --seed 17 --out " + (s / "b.json").string()) == 0);
  REQUIRE(run("simulate --seed 18 --out " + (s / "c.json").string()) == 0);
  CHECK(slurp(s / "a.json") == slurp(s / "b.json"));
  CHECK(slurp(s / "a.json") != slurp(s / "c.json"));

  REQUIRE(run("coarsest --in " + (s / "a.json").string() + " --out " + (s / "r1.json").string()) == 0);
  REQUIRE(run("coarsest --in " + (s / "a.json").string() + " --out " + (s / "r2.json").string()) == 0);
  CHECK(slurp(s / "r1.json") == slurp(s / "r2.json"));
}

TEST_CASE("sweeps write CSV and JSON deterministically") {
  Scratch s;
  std::ofstream(s / "cfg.json") << R"({"omega_grid": [0.0, 0.01], "zeta_grid": [1, 5], "verify_samples": 2})";
  const std::string common = " --in " + (s / "cfg.json").string() + " --trials 3 --seed 5";
  REQUIRE(run("sweep-noise" + common + " --threads 1 --out " + (s / "n1.csv").string()) == 0);
  REQUIRE(run("sweep-noise" + common + " --threads 2 --out " + (s / "n2.csv").string()) == 0);
  CHECK(slurp(s / "n1.csv") == slurp(s / "n2.csv"));
  CHECK(slurp(s / "n1.csv.json") == slurp(s / "n2.csv.json"));
  const std::string csv = slurp(s / "n1.csv");
  CHECK(csv.rfind("grid_value,feasible_fraction,mean_delta_sq,slater_pass_fraction,trials\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);

  REQUIRE(run("sweep-prior" + common + " --out " + (s / "p.csv").string()) == 0);
  const json p = load(s / "p.csv.json");
  CHECK(p["records"].size() == 2);
  CHECK(p["records"][0]["trials"] == 3);
}

TEST_CASE("simulate can run a quantized closed loop") {
  Scratch s;
  std::ofstream(s / "cfg.json") << R"({"system": {"A": [[0.5]], "B": [1.0]}, "T": 4,
      "closed_loop": {"K": [-0.2], "rho": 0.5, "steps": 30, "x0": [1.0]}})";
  REQUIRE(run("simulate --in " + (s / "cfg.json").string() + " --out " + (s / "o.json").string()) == 0);
  const json o = load(s / "o.json");
  const auto& states = o["closed_loop"]["states"];
  REQUIRE(states.size() == 1);
  REQUIRE(states[0].size() == 31);
  CHECK(std::abs(states[0][30].get<double>()) < 1e-5);
}
