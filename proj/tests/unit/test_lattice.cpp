#include <doctest.h>

#include <set>

#include "dwre/config.hpp"
#include "dwre/lattice.hpp"
#include "dwre/parallel.hpp"
#include "dwre/rng.hpp"

using namespace dwre;

TEST_CASE("lattice vector arithmetic") {
  LatticeVector a{1, -2, 3};
  LatticeVector b{4, 0, -1};
  CHECK((a + b) == LatticeVector{5, -2, 2});
  CHECK((a - b) == LatticeVector{-3, -2, 4});
  CHECK(a.dot(b) == 1);
  CHECK(a.norm2() == 14);
  CHECK((2 * a) == LatticeVector{2, -4, 6});
  CHECK(LatticeVector(3).is_zero());
  CHECK_FALSE(a == LatticeVector{1, -2});
  CHECK(a.to_string() == "(1,-2,3)");
}

TEST_CASE("dimension bounds") {
  CHECK_THROWS_AS(LatticeVector(0), DimensionError);
  CHECK_THROWS_AS(LatticeVector(kMaxDimension + 1), DimensionError);
}

TEST_CASE("coordinate range") {
  LatticeVector v{kCoordinateLimit - 1, 0};
  CHECK(v.in_coordinate_range());
  v[0] += 1;
  CHECK_FALSE(v.in_coordinate_range());
}

TEST_CASE("direction normalizes") {
  Direction l{3.0, 4.0};
  CHECK(l[0] == doctest::Approx(0.6));
  CHECK(l[1] == doctest::Approx(0.8));
  CHECK_THROWS(Direction{0.0, 0.0});
}

TEST_CASE("counter rng is a pure function of key and index") {
  CounterRng a(StreamKey(7, "x").add(3));
  CounterRng b(StreamKey(7, "x").add(3));
  for (int i = 0; i < 10; ++i) CHECK(a() == b());
  CounterRng c(StreamKey(7, "y").add(3));
  CounterRng d(StreamKey(7, "x").add(3));
  CHECK(c() != d());
}

TEST_CASE("site keys are distinct for neighbouring sites") {
  std::set<std::uint64_t> keys;
  for (std::int64_t x = -20; x <= 20; ++x)
    for (std::int64_t y = -20; y <= 20; ++y) {
      std::int64_t c[2] = {x, y};
      keys.insert(StreamKey(1, "site").add_coords(c).value());
    }
  CHECK(keys.size() == 41 * 41);
}

TEST_CASE("uniform draws have the right mean") {
  CounterRng r(StreamKey(11, "u"));
  double s = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    double u = r.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    s += u;
  }
  CHECK(std::abs(s / n - 0.5) < 3.0 * std::sqrt(1.0 / 12.0 / n));
}

TEST_CASE("poisson draws have the right mean") {
  CounterRng r(StreamKey(5, "p"));
  double s = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) s += r.poisson(2.5);
  CHECK(std::abs(s / n - 2.5) < 3.0 * std::sqrt(2.5 / n));
  CHECK(r.poisson(0.0) == 0);
}

TEST_CASE("parallel_for fills every slot independent of worker count") {
  std::vector<std::uint64_t> one(5000), many(5000);
  parallel_for(one.size(), 1, [&](std::size_t i) { one[i] = mix64(i); });
  parallel_for(many.size(), 8, [&](std::size_t i) { many[i] = mix64(i); });
  CHECK(one == many);
  CHECK_THROWS(parallel_for(1000, 4, [](std::size_t i) {
    if (i == 600) throw std::runtime_error("boom");
  }));
}

TEST_CASE("config parsing") {
  auto cfg = Config::parse(
      "# comment\n"
      "[environment]\n"
      "dimension = 2\n"
      "step = 1 0 : 0.5\n"
      "step = -1 0 : 0.5 ; trailing\n"
      "\n"
      "[run]\n"
      "seed = 42\n");
  CHECK(cfg.get_int("environment", "dimension") == 2);
  CHECK(cfg.all("environment", "step").size() == 2);
  CHECK(cfg.all("environment", "step")[1].line == 5);
  CHECK(cfg.get_int("run", "seed") == 42);
  CHECK(cfg.get_double("run", "missing", 1.5) == 1.5);
  CHECK_THROWS_AS(cfg.get_int("environment", "step"), ConfigError);
}

TEST_CASE("config errors carry line numbers") {
  try {
    Config::parse("[a]\nb = 1\nnot a pair\n");
    FAIL("expected a parse error");
  } catch (const ConfigError& e) {
    CHECK(e.line() == 3);
    CHECK(std::string(e.what()).rfind("line 3:", 0) == 0);
  }
  CHECK_THROWS_AS(Config::parse("x = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_double("1.5x"), ConfigError);
}
