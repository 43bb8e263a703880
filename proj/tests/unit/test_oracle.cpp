#include <doctest.h>

#include <cmath>
#include <functional>

#include "dwre/oracle.hpp"
#include "dwre/rng.hpp"
#include "dwre/walk.hpp"
#include "specs.hpp"

using namespace dwre;
using dwre::testing::axis_2d;
using dwre::testing::symmetric_1d;

namespace {

// Full-environment enumeration: every assignment of eta on all sites within
// distance n of the origin, each walk run by the simulator itself.
double brute_force(const EnvironmentSpec& spec, std::size_t n, const std::function<bool(const Trajectory&)>& event) {
  const auto sites = ball_offsets(spec.dimension, static_cast<int>(n));
  std::vector<std::size_t> choice(sites.size(), 0);
  double total = 0.0;
  for (;;) {
    FieldHandle f(spec, 0);
    double w = 1.0;
    for (std::size_t i = 0; i < sites.size(); ++i) {
      f.set_override(sites[i], choice[i]);
      w *= spec.probabilities[choice[i]];
    }
    if (event(run_walk(f, n))) total += w;
    std::size_t i = 0;
    while (i < choice.size() && ++choice[i] == spec.support.size()) choice[i++] = 0;
    if (i == choice.size()) break;
  }
  return total;
}

}  // namespace

TEST_CASE("P(X_3 >= 1) for the symmetric 1d walk") {
  auto r = oracle::exact_event(symmetric_1d(), 3, Event{EventKind::tail, Direction{1.0}, 1.0 / 3.0});
  CHECK(std::abs(r.value - 0.5) <= 1e-15);
  CHECK(r.abs_error_bound < 1e-14);
  // hand enumeration: first -1 site at z = 1, 2, >= 3
  CHECK(r.value == doctest::Approx(0.25 + 0.125 + 0.125));
}

TEST_CASE("one step in 2d") {
  auto r = oracle::exact_event(axis_2d(), 1, Event{EventKind::tail, Direction{1.0, 0.0}, 1.0});
  CHECK(r.value == doctest::Approx(0.25));
}

TEST_CASE("law sums to one") {
  for (std::size_t n : {1u, 3u, 6u}) {
    double s = 0.0;
    for (const auto& [x, p] : oracle::exact_law(axis_2d(0.4), n)) s += p;
    CHECK(std::abs(s - 1.0) <= 1e-12);
    CHECK(std::abs(oracle::total_weight(axis_2d(0.4), n).value - 1.0) <= 1e-12);
  }
}

TEST_CASE("exact mgf") {
  auto spec = symmetric_1d();
  CHECK(oracle::exact_mgf(spec, 4, {0.0}).value == 0.0);
  CHECK(oracle::exact_mgf(spec, 1, {1.0}).value == doctest::Approx(std::log(std::cosh(1.0))).epsilon(1e-14));
}

TEST_CASE("exact mgf is convex") {
  CounterRng rng(StreamKey(3, "holder"));
  auto spec = axis_2d(0.4);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> a{4 * rng.uniform() - 2, 4 * rng.uniform() - 2};
    std::vector<double> b{4 * rng.uniform() - 2, 4 * rng.uniform() - 2};
    const double alpha = rng.uniform();
    std::vector<double> mid{alpha * a[0] + (1 - alpha) * b[0], alpha * a[1] + (1 - alpha) * b[1]};
    const double lhs = oracle::exact_mgf(spec, 4, mid).value;
    const double rhs = alpha * oracle::exact_mgf(spec, 4, a).value + (1 - alpha) * oracle::exact_mgf(spec, 4, b).value;
    CHECK(lhs <= rhs + 1e-12);
  }
}

TEST_CASE("hitting probabilities") {
  Direction l{1.0};
  CHECK(oracle::exact_hitting(symmetric_1d(), 5, l, 3.0, false).value == doctest::Approx(0.125));
  CHECK(oracle::exact_hitting(symmetric_1d(0.3), 4, l, 2.0, false).value == doctest::Approx(0.09));
  CHECK(oracle::exact_hitting(symmetric_1d(), 4, l, 0.0, false).value == doctest::Approx(1.0));
  CHECK(oracle::exact_hitting(symmetric_1d(), 3, l, 1.0, true).value == doctest::Approx(0.5));
  CHECK(oracle::exact_hitting(symmetric_1d(), 3, l, 1.0, false).value == doctest::Approx(0.5));
}

TEST_CASE("agreement with full-environment enumeration") {
  Direction l1{1.0};
  auto s1 = symmetric_1d(0.3);
  for (std::size_t n : {2u, 3u, 4u}) {
    for (double level : {0.0, 1.0, 2.0}) {
      auto hit = [&](const Trajectory& t) { return hitting_time(t, l1, level) <= n; };
      auto noback = [&](const Trajectory& t) {
        auto h = hitting_time(t, l1, level);
        return h <= n && h <= backtrack_times(t, l1, 1).times[0];
      };
      auto tail = [&](const Trajectory& t) { return position_at(t, n)[0] >= level; };
      CHECK(oracle::exact_hitting(s1, n, l1, level, false).value == doctest::Approx(brute_force(s1, n, hit)));
      CHECK(oracle::exact_hitting(s1, n, l1, level, true).value == doctest::Approx(brute_force(s1, n, noback)));
      CHECK(oracle::exact_event(s1, n, Event{EventKind::tail, l1, level / n}).value ==
            doctest::Approx(brute_force(s1, n, tail)));
    }
  }
  Direction l2{1.0, 1.0};
  auto s2 = axis_2d(0.4);
  auto tail2 = [&](const Trajectory& t) { return reaches_level(position_at(t, 2).dot(l2.span()), 0.5); };
  CHECK(oracle::exact_event(s2, 2, Event{EventKind::tail, l2, 0.25}).value ==
        doctest::Approx(brute_force(s2, 2, tail2)));
}

TEST_CASE("result does not depend on branch order") {
  auto a = axis_2d(0.4);
  auto b = a;
  std::swap(b.support[0], b.support[3]);
  std::swap(b.probabilities[0], b.probabilities[3]);
  Event e{EventKind::hit_noback, Direction{1.0, 0.5}, 0.3};
  auto ra = oracle::exact_event(a, 6, e), rb = oracle::exact_event(b, 6, e);
  CHECK(std::abs(ra.value - rb.value) <= ra.abs_error_bound + rb.abs_error_bound);
  CHECK(ra.branches == rb.branches);
}

TEST_CASE("guard and preconditions") {
  CHECK_THROWS_AS(oracle::exact_event(axis_2d(), 12, Event{EventKind::tail, Direction{1.0, 0.0}, 0.1}),
                  std::invalid_argument);
  auto dep = build_block_factor(symmetric_1d(), 1, 0.2);
  CHECK_THROWS_AS(oracle::exact_event(dep, 3, Event{EventKind::tail, Direction{1.0}, 0.1}), std::invalid_argument);
}
