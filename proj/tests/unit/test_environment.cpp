#include <doctest.h>

#include <cmath>

#include "dwre/environment.hpp"
#include "specs.hpp"

using namespace dwre;
using dwre::testing::symmetric_1d;

namespace {

bool mentions(const std::vector<SpecViolation>& r, const std::string& cond, const std::string& text) {
  for (const auto& v : r)
    if (v.condition == cond && v.message.find(text) != std::string::npos) return true;
  return false;
}

}  // namespace

TEST_CASE("validate_spec") {
  auto s = symmetric_1d();
  s.c = 0.4;
  CHECK(validate_spec(s).empty());

  auto bad = s;
  bad.probabilities = {0.5, 0.4};
  CHECK(mentions(validate_spec(bad), "(i)", "sum to"));

  EnvironmentSpec single;
  single.dimension = 2;
  single.support = {LatticeVector{1, 0}};
  single.probabilities = {1.0};
  single.nice_subset = {0};
  single.c = 0.5;
  auto r = validate_spec(single);
  REQUIRE(mentions(r, "(iii)", "fails niceness"));
  CHECK(mentions(r, "(iii)", "no positive dot product"));

  auto too_big_c = s;
  too_big_c.c = 0.6;
  CHECK(mentions(validate_spec(too_big_c), "(iii)", "< c"));

  auto dependent = s;
  dependent.dependence_range = 3.0;
  CHECK(mentions(validate_spec(dependent), "(ii)", "block-factor"));

  auto bounded = s;
  bounded.support = {LatticeVector{3}, LatticeVector{-1}};
  bounded.declared_bound = 2.0;
  CHECK(mentions(validate_spec(bounded), "(i)", "exceeds the bound"));
}

TEST_CASE("sampling is pure") {
  FieldHandle f(symmetric_1d(), 99);
  for (std::int64_t z = -50; z < 50; ++z) CHECK(f.sample_eta(LatticeVector{z}) == f.sample_eta(LatticeVector{z}));
  FieldHandle g(symmetric_1d(), 99);
  for (std::int64_t z = -50; z < 50; ++z) CHECK(f.sample_eta(LatticeVector{z}) == g.sample_eta(LatticeVector{z}));
  CHECK_THROWS_AS(f.sample_eta(LatticeVector{1, 2}), DimensionError);
}

TEST_CASE("degenerate law") {
  FieldHandle f(dwre::testing::monotone_1d(), 3);
  for (std::int64_t z = 0; z < 100; ++z) CHECK(f.sample_eta(LatticeVector{z}) == LatticeVector{1});
}

TEST_CASE("marginal frequency matches binomial CI") {
  FieldHandle f(symmetric_1d(), 12345);
  const int n = 100000;
  int plus = 0;
  for (int z = 0; z < n; ++z) plus += f.sample_eta(LatticeVector{z})[0] == 1;
  CHECK(std::abs(plus / double(n) - 0.5) <= 3.0 * std::sqrt(0.25 / n));
}

TEST_CASE("block factor constants") {
  CHECK_THROWS(build_block_factor(symmetric_1d(), 0, 0.3));
  CHECK_THROWS(build_block_factor(symmetric_1d(), 1, 1.0));
  auto b = build_block_factor(symmetric_1d(), 1, 0.3);
  CHECK(b.dependence_range == 2.0);
  CHECK(b.c == doctest::Approx(0.35));
  CHECK(validate_spec(b).empty());
  CHECK_THROWS(build_block_factor(b, 1, 0.3));
}

TEST_CASE("block factor with no mixing reproduces the iid field") {
  auto iid = symmetric_1d();
  FieldHandle a(iid, 77), b(build_block_factor(iid, 2, 0.0), 77);
  for (std::int64_t z = -200; z < 200; ++z) CHECK(a.sample_index(LatticeVector{z}) == b.sample_index(LatticeVector{z}));
}

TEST_CASE("block factor marginals and independence beyond 2K") {
  auto spec = build_block_factor(symmetric_1d(), 1, 0.3);
  const int seeds = 100000;
  double s0 = 0, s3 = 0, s03 = 0;
  int plus = 0;
  for (int k = 0; k < seeds; ++k) {
    FieldHandle f(spec, static_cast<std::uint64_t>(k));
    const double a = f.sample_eta(LatticeVector{0})[0] == 1;
    const double b = f.sample_eta(LatticeVector{3})[0] == 1;
    s0 += a;
    s3 += b;
    s03 += a * b;
    plus += static_cast<int>(a);
  }
  CHECK(std::abs(plus / double(seeds) - 0.5) <= 3.0 * std::sqrt(0.25 / seeds));
  const double cov = s03 / seeds - (s0 / seeds) * (s3 / seeds);
  const double corr = cov / 0.25;
  CHECK(std::abs(corr) <= 3.0 / std::sqrt(double(seeds)));
}

TEST_CASE("block factor neighbours are dependent when mixing is strong") {
  // Positive control for the independence test: overlapping kernels.
  auto spec = build_block_factor(symmetric_1d(), 1, 0.95);
  const int seeds = 100000;
  double s0 = 0, s1 = 0, s01 = 0;
  for (int k = 0; k < seeds; ++k) {
    FieldHandle f(spec, static_cast<std::uint64_t>(k));
    const double a = f.sample_eta(LatticeVector{0})[0] == 1;
    const double b = f.sample_eta(LatticeVector{1})[0] == 1;
    s0 += a;
    s1 += b;
    s01 += a * b;
  }
  const double corr = (s01 / seeds - (s0 / seeds) * (s1 / seeds)) / 0.25;
  CHECK(std::abs(corr) > 5.0 / std::sqrt(double(seeds)));
}

TEST_CASE("ellipticity under conditioning on neighbours") {
  auto spec = build_block_factor(symmetric_1d(), 1, 0.6);
  const int seeds = 200000;
  // Condition on eta_{-1} = eta_{1} = +1 and eta_{-2} = eta_2 = -1.
  int cond = 0, plus = 0, minus = 0;
  for (int k = 0; k < seeds; ++k) {
    FieldHandle f(spec, static_cast<std::uint64_t>(k) + 1000000);
    if (f.sample_eta(LatticeVector{-1})[0] != 1 || f.sample_eta(LatticeVector{1})[0] != 1) continue;
    if (f.sample_eta(LatticeVector{-2})[0] != -1 || f.sample_eta(LatticeVector{2})[0] != -1) continue;
    ++cond;
    const auto v = f.sample_eta(LatticeVector{0})[0];
    plus += v == 1;
    minus += v == -1;
  }
  REQUIRE(cond > 1000);
  const double sigma = std::sqrt(spec.c * (1 - spec.c) / cond);
  CHECK(plus / double(cond) >= spec.c - 3 * sigma);
  CHECK(minus / double(cond) >= spec.c - 3 * sigma);
}

TEST_CASE("stationarity of pattern frequencies") {
  auto spec = build_block_factor(dwre::testing::axis_2d(), 1, 0.5);
  const int seeds = 20000;
  int at_origin = 0, shifted = 0;
  const LatticeVector shift{17, -5};
  for (int k = 0; k < seeds; ++k) {
    FieldHandle f(spec, static_cast<std::uint64_t>(k));
    auto pattern = [&](const LatticeVector& o) {
      return f.sample_index(o) == 0 && f.sample_index(o + LatticeVector{1, 0}) == 2;
    };
    at_origin += pattern(LatticeVector{0, 0});
    shifted += pattern(shift);
  }
  const double p1 = at_origin / double(seeds), p2 = shifted / double(seeds);
  const double se = std::sqrt((p1 * (1 - p1) + p2 * (1 - p2)) / seeds);
  CHECK(std::abs(p1 - p2) <= 3 * se);
  CHECK(std::abs(p1 - 1.0 / 16.0) <= 3 * std::sqrt(p1 * (1 - p1) / seeds));
}

TEST_CASE("ball offsets") {
  CHECK(ball_offsets(2, 1).size() == 5);
  CHECK(ball_offsets(2, 2).size() == 13);
  CHECK(ball_offsets(1, 3).size() == 7);
  CHECK(ball_offsets(3, 1).size() == 7);
}

TEST_CASE("config round trip") {
  auto cfg = Config::parse(
      "[environment]\n"
      "dimension = 2\n"
      "step = 1 0 : 0.4\n"
      "step = -1 0 : 0.2\n"
      "step = 0 1 : 0.2\n"
      "step = 0 -1 : 0.2\n"
      "nice = 0, 1, 2, 3\n"
      "c = 0.2\n");
  auto spec = spec_from_config(cfg);
  CHECK(spec.dimension == 2);
  CHECK(spec.support.size() == 4);
  CHECK(spec.probabilities[0] == 0.4);
  CHECK(validate_spec(spec).empty());
  auto again = spec_from_config(Config::parse(spec_to_config(spec)));
  CHECK(again.support == spec.support);
  CHECK(again.probabilities == spec.probabilities);
  CHECK(again.c == spec.c);

  auto dep = spec_from_config(Config::parse(
      "[environment]\ndimension = 1\nstep = 1 : 0.5\nstep = -1 : 0.5\nK = 1\nepsilon = 0.3\n"));
  CHECK(dep.kernel_radius == 1);
  CHECK(dep.dependence_range == 2.0);
  CHECK(dep.c == doctest::Approx(0.35));
  auto dep2 = spec_from_config(Config::parse(spec_to_config(dep)));
  CHECK(dep2.kernel_radius == 1);
  CHECK(dep2.mixing == dep.mixing);

  CHECK_THROWS_AS(spec_from_config(Config::parse("[environment]\ndimension = 2\nstep = 1 : 1\n")), ConfigError);
}
