#include <doctest.h>

#include <cmath>
#include <numbers>

#include "dwre/nice_set.hpp"

using namespace dwre;
using namespace dwre::nice;

namespace {

std::vector<LatticeVector> vs(std::initializer_list<std::initializer_list<std::int64_t>> rows) {
  std::vector<LatticeVector> out;
  for (auto r : rows) out.emplace_back(r);
  return out;
}

// Brute-force minimum of max_i u_i . l over a fine angular grid (d = 2).
double kappa_bruteforce_2d(const std::vector<LatticeVector>& u, int n) {
  double best = 1e300;
  for (int k = 0; k < n; ++k) {
    const double a = 2.0 * std::numbers::pi * k / n;
    const double l[2] = {std::cos(a), std::sin(a)};
    double m = -1e300;
    for (const auto& v : u) m = std::max(m, v.dot(l));
    best = std::min(best, m);
  }
  return best;
}

}  // namespace

TEST_CASE("symmetric pair is nice") {
  auto cert = is_nice(vs({{1}, {-1}}));
  CHECK(cert.nice);
  CHECK(cert.positive_combination == std::vector<std::int64_t>{1, 1});
}

TEST_CASE("open quadrant is not nice") {
  auto cert = is_nice(vs({{1, 0}, {0, 1}}));
  CHECK_FALSE(cert.nice);
  REQUIRE(cert.violating_direction.size() == 2);
  CHECK(cert.violating_direction[0] <= 0.0);
  CHECK(cert.violating_direction[1] <= 0.0);
  double n = std::hypot(cert.violating_direction[0], cert.violating_direction[1]);
  CHECK(n == doctest::Approx(1.0));
}

TEST_CASE("triangle certificate matches brute-force coefficient search") {
  auto u = vs({{2, 1}, {-1, 1}, {-1, -3}});
  // smallest positive triple (a,b,c) with a u1 + b u2 + c u3 = 0, found by scanning
  std::vector<std::int64_t> found;
  for (std::int64_t s = 3; s < 40 && found.empty(); ++s)
    for (std::int64_t a = 1; a < s && found.empty(); ++a)
      for (std::int64_t b = 1; a + b < s; ++b) {
        std::int64_t c = s - a - b;
        if ((a * u[0] + b * u[1] + c * u[2]).is_zero()) {
          found = {a, b, c};
          break;
        }
      }
  CHECK(found == std::vector<std::int64_t>{4, 5, 3});
  auto cert = is_nice(u);
  CHECK(cert.nice);
  CHECK(cert.positive_combination == found);
}

TEST_CASE("degenerate sets are rejected") {
  CHECK_FALSE(is_nice(vs({{1, 0}, {-1, 0}})).nice);  // span is a line
  auto cert = is_nice(vs({{1, 0}, {-1, 0}}));
  CHECK(std::abs(cert.violating_direction[0]) < 1e-12);
  CHECK_FALSE(is_nice(vs({{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}})).nice);
  CHECK(is_nice(vs({{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}})).nice);
  CHECK_THROWS(is_nice(std::vector<LatticeVector>{}));
  CHECK_THROWS(is_nice(vs({{1, 0}, {0, 0}})));
  CHECK_THROWS(is_nice(vs({{1, 0}, {-1}})));
}

TEST_CASE("sphere grid oracle agrees on hand-picked sets") {
  const std::vector<std::vector<LatticeVector>> sets = {
      vs({{1}, {-1}}),
      vs({{1}}),
      vs({{1, 0}, {0, 1}}),
      vs({{1, 0}, {-1, 0}}),
      vs({{1, 0}, {0, 1}, {-1, -1}}),
      vs({{2, 1}, {-1, 1}, {-1, -3}}),
      vs({{1, 0}, {0, 1}, {-1, 0}}),
      vs({{1, 1, 0}, {-1, 1, 0}, {0, -1, 1}, {0, 0, -1}}),
      vs({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {-1, -1, -1}}),
  };
  for (const auto& s : sets) CHECK(is_nice(s).nice == nice_by_sphere_grid(s));
}

TEST_CASE("zero loops") {
  CHECK(find_zero_loop(NiceSet(vs({{1}, {-1}}))).q == std::vector<std::int64_t>{1, 1});
  CHECK(find_zero_loop(NiceSet(vs({{1, 0}, {0, 1}, {-1, -1}}))).q == std::vector<std::int64_t>{1, 1, 1});
  NiceSet tri(vs({{2, 1}, {-1, 1}, {-1, -3}}));
  auto loop = find_zero_loop(tri);
  CHECK(loop.q == std::vector<std::int64_t>{4, 5, 3});
  CHECK(loop.minimal);
  CHECK(verify_loop(tri, loop).empty());
  LoopCoefficients bad{{1, 1, 0}};
  CHECK_FALSE(verify_loop(tri, bad).empty());
}

TEST_CASE("non-nice set cannot build a NiceSet") {
  CHECK_THROWS_AS(NiceSet(vs({{1, 0}, {0, 1}})), std::invalid_argument);
}

TEST_CASE("half-space loop rotation") {
  NiceSet s(vs({{1, 0}, {0, 1}, {-1, -1}}));
  auto a = halfspace_loop(s, Direction{1.0, 0.0});
  CHECK(a.steps == vs({{1, 0}, {0, 1}, {-1, -1}}));
  CHECK(verify_halfspace_loop(a).empty());
  auto b = halfspace_loop(s, Direction{-1.0, 0.0});
  CHECK(b.steps == vs({{0, 1}, {-1, -1}, {1, 0}}));
  CHECK(verify_halfspace_loop(b).empty());
  auto c = halfspace_loop(NiceSet(vs({{1}, {-1}})), Direction{1.0});
  CHECK(c.steps == vs({{1}, {-1}}));
}

TEST_CASE("half-space loop verification catches violations") {
  HalfspaceLoop bad;
  bad.direction = {1.0};
  bad.steps = vs({{-1}, {1}});
  CHECK_FALSE(verify_halfspace_loop(bad).empty());
  bad.steps = vs({{1}, {-1}, {1}, {-1}});
  CHECK_FALSE(verify_halfspace_loop(bad).empty());
  bad.steps = vs({{1}, {1}});
  CHECK_FALSE(verify_halfspace_loop(bad).empty());
}

TEST_CASE("reduce_loop removes repeated partial sums") {
  auto steps = vs({{1}, {-1}, {1}, {-1}});
  CHECK(reduce_loop(steps) == vs({{1}, {-1}}));
  auto tri = vs({{2, 1}, {-1, 1}, {-1, -3}});
  CHECK(reduce_loop(tri) == tri);
}

TEST_CASE("kappa values") {
  auto k1 = rho_min(NiceSet(vs({{1}, {-1}})));
  CHECK(k1.kappa == 1.0);
  CHECK(k1.kappa_lower == 1.0);

  auto square = vs({{1, 0}, {-1, 0}, {0, 1}, {0, -1}});
  auto k2 = rho_min(NiceSet(square));
  CHECK(std::abs(k2.kappa - std::sqrt(0.5)) < 1e-3);
  CHECK(std::abs(kappa_bruteforce_2d(square, 100000) - std::sqrt(0.5)) < 1e-3);
  CHECK(k2.kappa_lower > 0.0);
  CHECK(k2.kappa_lower <= k2.kappa);

  auto tri = vs({{1, 0}, {0, 1}, {-1, -1}});
  auto k3 = rho_min(NiceSet(tri));
  CHECK(std::abs(k3.kappa - 1.0 / std::sqrt(5.0)) < 1e-3);
  CHECK(std::abs(kappa_bruteforce_2d(tri, 100000) - 1.0 / std::sqrt(5.0)) < 1e-3);

  CHECK_THROWS_AS(rho_min(NiceSet(tri), 999), std::invalid_argument);
}

TEST_CASE("kappa in three dimensions") {
  auto octa = vs({{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}});
  auto k = rho_min(NiceSet(octa), 1000);
  CHECK(std::abs(k.kappa - 1.0 / std::sqrt(3.0)) < 1e-9);
  CHECK(k.kappa_lower > 0.0);
  CHECK(k.kappa_lower <= k.kappa);
}
