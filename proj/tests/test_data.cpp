#include <doctest.h>

#include <random>
#include <vector>

#include "quantstab/data.hpp"
#include "quantstab/experiments.hpp"
#include "quantstab/fixtures.hpp"
#include "quantstab/lti.hpp"
#include "quantstab/random.hpp"

using namespace quantstab;

namespace {

UncertaintyEllipsoid from_blocks(const MatrixXd& N11, const MatrixXd& N12, const MatrixXd& N22) {
  const auto n = N11.rows();
  UncertaintyEllipsoid ell;
  ell.N.resize(2 * n, 2 * n);
  ell.N << N11, N12, N12.transpose(), N22;
  ell.N11 = N11;
  ell.N12 = N12;
  ell.N22 = N22;
  ell.X_U = MatrixXd::Zero(n, 1);
  return ell;
}

TrajectoryData benchmark_data(std::uint64_t seed, double omega, MatrixXd* noise = nullptr) {
  const auto sys = fixtures::benchmark_system();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  VectorXd x0(3);
  for (int i = 0; i < 3; ++i) x0(i) = g(rng);
  std::vector<double> u(20);
  for (auto& v : u) v = g(rng);
  const MatrixXd W = sample_ball_noise(3, omega, 20, seed + 1000);
  if (noise) *noise = W;
  return simulate_open_loop(sys, x0, u, W);
}

}  // namespace

TEST_CASE("noise bounds: constructors and validation") {
  const auto ball = NoiseBound::ball(0.1, 20, 3, 2.0);
  CHECK(ball.Phi11.isApprox(MatrixXd::Identity(3, 3) * 4.0));
  CHECK(ball.Phi12.isZero());
  CHECK(ball.Phi22.isApprox(-MatrixXd::Identity(20, 20)));
  CHECK_NOTHROW(ball.validate());

  NoiseBound bad = ball;
  bad.Phi22(0, 0) = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = ball;
  bad.Phi11(0, 1) = 1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = ball;
  bad.Phi12 = MatrixXd::Zero(3, 19);
  CHECK_THROWS_AS(bad.validate(), DimensionError);
}

TEST_CASE("noise bounds: sampled ball noise satisfies the summed bound") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const MatrixXd W = sample_ball_noise(3, 0.3, 20, seed);
    CHECK(NoiseBound::ball(0.3, 20, 3).admits(W));
  }
  CHECK_FALSE(NoiseBound::exact(2, 1).admits(MatrixXd::Constant(1, 2, 0.1)));
  CHECK(NoiseBound::exact(2, 1).admits(MatrixXd::Zero(1, 2)));
}

TEST_CASE("build_ellipsoid: Example 1 blocks") {
  const auto ex = fixtures::example1();
  const auto ell = build_ellipsoid(ex.data, ex.B, ex.bound);
  CHECK(ell.N11.isApprox(MatrixXd::Identity(2, 2)));
  CHECK(ell.N12.isZero());
  CHECK(ell.N22.isApprox((MatrixXd(2, 2) << -2, 0, 0, 0).finished()));
  CHECK(ell.N.isApprox(ell.N.transpose()));
}

TEST_CASE("build_ellipsoid: dimension and bound errors") {
  const auto ex = fixtures::example1();
  CHECK_THROWS_AS(build_ellipsoid(ex.data, MatrixXd::Identity(3, 3), ex.bound), DimensionError);
  auto bound = ex.bound;
  bound.Phi22 = MatrixXd::Identity(2, 2);
  CHECK_THROWS(build_ellipsoid(ex.data, ex.B, bound));
  auto data = ex.data;
  data.X_plus = MatrixXd::Zero(2, 3);
  CHECK_THROWS_AS(build_ellipsoid(data, ex.B, ex.bound), DimensionError);
}

TEST_CASE("membership: exact data puts the true matrix on the boundary") {
  const auto data = benchmark_data(1, 0.0);
  const auto sys = fixtures::benchmark_system();
  const auto ell = build_ellipsoid(data, sys.B(), NoiseBound::exact(20, 3));
  CHECK(ell.form(sys.A()).norm() < 1e-9 * ell.N.norm());
  CHECK(membership(ell, sys.A()));
  MatrixXd perturbed = sys.A();
  perturbed(0, 0) += 1.0;
  CHECK_FALSE(membership(ell, perturbed));
}

TEST_CASE("membership: Example 1 nilpotent family") {
  const auto ex = fixtures::example1();
  const auto ell = build_ellipsoid(ex.data, ex.B, ex.bound);
  for (double k : {0.0, 1.0, 1e3, 1e6}) {
    CAPTURE(k);
    CHECK(membership(ell, (MatrixXd(2, 2) << 0, k, 0, 0).finished()));
  }
}

TEST_CASE("membership: the true matrix lies in the noisy set") {
  const auto sys = fixtures::benchmark_system();
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto data = benchmark_data(seed, 0.05);
    const auto ell = build_ellipsoid(data, sys.B(), NoiseBound::ball(0.05, 20, 3));
    CHECK(membership(ell, sys.A()));
  }
}

TEST_CASE("slater check") {
  const MatrixXd I = MatrixXd::Identity(2, 2);
  CHECK(slater_check(from_blocks(I, MatrixXd::Zero(2, 2), -I)));
  CHECK(positive_eigenvalue_count(from_blocks(I, MatrixXd::Zero(2, 2), -I)) == 2);
  CHECK_FALSE(slater_check(from_blocks(-I, MatrixXd::Zero(2, 2), -I)));

  const auto sys = fixtures::benchmark_system();
  int passes = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto ell = build_ellipsoid(benchmark_data(seed, 0.1), sys.B(), NoiseBound::ball(0.1, 20, 3));
    passes += slater_check(ell) ? 1 : 0;
  }
  CHECK(passes == 20);
  const auto exact = build_ellipsoid(benchmark_data(0, 0.0), sys.B(), NoiseBound::exact(20, 3));
  CHECK_FALSE(slater_check(exact));
}

TEST_CASE("rank condition") {
  CHECK_FALSE(rank_condition(fixtures::example1().data));
  TrajectoryData padded;
  padded.X_minus = MatrixXd::Zero(3, 5);
  padded.X_minus.leftCols(3).setIdentity();
  padded.U = MatrixXd::Zero(1, 5);
  padded.X_plus = MatrixXd::Zero(3, 5);
  CHECK(rank_condition(padded));
  CHECK(data_rank(padded) == 3);

  std::mt19937_64 rng(9);
  std::normal_distribution<double> g;
  for (int s = 0; s < 100; ++s) {
    TrajectoryData d;
    d.X_minus.resize(3, 20);
    for (int i = 0; i < d.X_minus.size(); ++i) d.X_minus.data()[i] = g(rng);
    d.U = MatrixXd::Zero(1, 20);
    d.X_plus = MatrixXd::Zero(3, 20);
    CHECK(rank_condition(d));
  }

  TrajectoryData short_data = padded;
  short_data.X_minus = MatrixXd::Random(3, 2);
  short_data.U = MatrixXd::Zero(1, 2);
  short_data.X_plus = MatrixXd::Zero(3, 2);
  CHECK_FALSE(rank_condition(short_data));
}

TEST_CASE("kernel inclusion") {
  const auto ex = fixtures::example1();
  CHECK(kernel_inclusion(build_ellipsoid(ex.data, ex.B, ex.bound)));
  const MatrixXd I = MatrixXd::Identity(2, 2);
  MatrixXd N12 = MatrixXd::Zero(2, 2);
  N12(0, 1) = 1.0;
  CHECK_FALSE(kernel_inclusion(from_blocks(I, N12, (MatrixXd(2, 2) << -1, 0, 0, 0).finished())));
}

TEST_CASE("center and radius") {
  const MatrixXd I = MatrixXd::Identity(2, 2);
  const auto unit = center_and_radius(from_blocks(I, MatrixXd::Zero(2, 2), -I));
  REQUIRE(unit.has_value());
  CHECK(unit->A_center.isZero());
  CHECK(unit->shape.isApprox(I));

  const auto sys = fixtures::benchmark_system();
  const auto exact = build_ellipsoid(benchmark_data(2, 0.0), sys.B(), NoiseBound::exact(20, 3));
  const auto geo = center_and_radius(exact);
  REQUIRE(geo.has_value());
  CHECK((geo->A_center - sys.A()).norm() < 1e-9);
  CHECK(geo->shape.norm() < 1e-9 * exact.N.norm());

  const auto ex = fixtures::example1();
  CHECK_FALSE(center_and_radius(build_ellipsoid(ex.data, ex.B, ex.bound)).has_value());
}

TEST_CASE("sample_members") {
  const auto sys = fixtures::benchmark_system();
  const auto ell = build_ellipsoid(benchmark_data(4, 0.05), sys.B(), NoiseBound::ball(0.05, 20, 3));
  const auto geo = center_and_radius(ell);
  REQUIRE(geo.has_value());

  const auto one = sample_members(ell, 1, 7);
  REQUIRE(one.size() == 1);
  CHECK(one[0].isApprox(geo->A_center));

  const auto many = sample_members(ell, 50, 7);
  REQUIRE(many.size() == 50);
  int boundary = 0;
  for (std::size_t i = 0; i < many.size(); ++i) {
    CHECK(membership(ell, many[i]));
    if (min_eigenvalue(ell.form(many[i])) < 1e-6 * ell.N.norm()) ++boundary;
  }
  CHECK(boundary >= 25);
  CHECK(sample_members(ell, 50, 7) == many);
  CHECK(sample_members(ell, 50, 8) != many);

  const auto exact = build_ellipsoid(benchmark_data(4, 0.0), sys.B(), NoiseBound::exact(20, 3));
  for (const auto& A : sample_members(exact, 10, 3)) CHECK((A - sys.A()).norm() < 1e-8);

  const auto ex = fixtures::example1();
  CHECK_THROWS_AS(sample_members(build_ellipsoid(ex.data, ex.B, ex.bound), 5, 1), std::domain_error);
}
