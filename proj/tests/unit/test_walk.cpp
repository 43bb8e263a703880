#include <doctest.h>

#include "dwre/walk.hpp"
#include "specs.hpp"

using namespace dwre;

namespace {

FieldHandle bouncing_field() {
  FieldHandle f(dwre::testing::symmetric_1d(), 1);
  f.set_override(LatticeVector{0}, 0);  // +1
  f.set_override(LatticeVector{1}, 1);  // -1
  return f;
}

FieldHandle square_field() {
  FieldHandle f(dwre::testing::axis_2d(), 1);
  f.set_override(LatticeVector{0, 0}, 0);  // (1,0)
  f.set_override(LatticeVector{1, 0}, 2);  // (0,1)
  f.set_override(LatticeVector{1, 1}, 1);  // (-1,0)
  f.set_override(LatticeVector{0, 1}, 3);  // (0,-1)
  return f;
}

}  // namespace

TEST_CASE("bouncing walk closes at the origin") {
  auto t = run_walk(bouncing_field(), 100);
  CHECK(t.positions == std::vector<LatticeVector>{LatticeVector{0}, LatticeVector{1}, LatticeVector{0}});
  REQUIRE(t.looped());
  CHECK(*t.tau == 2);
  CHECK(*t.theta == 0);
  CHECK(t.loop_period() == 2);
  for (std::size_t n = 0; n < 10; ++n) CHECK(position_at(t, n)[0] == static_cast<std::int64_t>(n % 2));
}

TEST_CASE("monotone walk never loops") {
  FieldHandle f(dwre::testing::monotone_1d(), 5);
  auto t = run_walk(f, 50);
  CHECK_FALSE(t.looped());
  CHECK(t.positions.size() == 51);
  CHECK(position_at(t, 5) == LatticeVector{5});
  CHECK_THROWS_AS(position_at(t, 51), std::out_of_range);
  Direction l{1.0};
  CHECK(hitting_time(t, l, 3.0) == 3);
  CHECK(hitting_time(t, l, 60.0) == kNever);
}

TEST_CASE("square loop") {
  auto t = run_walk(square_field(), 100);
  REQUIRE(t.looped());
  CHECK(*t.tau == 4);
  CHECK(*t.theta == 0);
  CHECK(position_at(t, 7) == LatticeVector{0, 1});
  CHECK(position_at(t, 4) == t.positions[0]);
  CHECK(position_at(t, 6, PathMode::stopped) == LatticeVector{0, 0});
}

TEST_CASE("hitting times on the bouncing walk") {
  auto t = run_walk(bouncing_field(), 100);
  Direction l{1.0};
  CHECK(hitting_time(t, l, 2.0) == kNever);
  CHECK(hitting_time(t, l, 1.0) == 1);
  CHECK(hitting_time(t, l, 0.0) == 0);
  auto rec = hitting_times(t, l, {0.0, 1.0, 2.0});
  CHECK(rec.times == std::vector<std::size_t>{0, 1, kNever});
}

TEST_CASE("downcrossings") {
  // dot products 0, 1, 2, -1
  FieldHandle f(dwre::testing::uniform_spec({LatticeVector{1}, LatticeVector{-3}, LatticeVector{2}}), 1);
  f.set_override(LatticeVector{0}, 0);
  f.set_override(LatticeVector{1}, 0);
  f.set_override(LatticeVector{2}, 1);
  f.set_override(LatticeVector{-1}, 2);  // back to 1: loop
  auto t = run_walk(f, 20);
  Direction l{1.0};
  CHECK(backtrack_times(t, l, 1).times[0] == 3);

  FieldHandle up(dwre::testing::monotone_1d(), 1);
  CHECK(backtrack_times(run_walk(up, 20), l, 2).times == std::vector<std::size_t>{kNever, kNever});

  // dot products 0, -1, 0, -1, ...
  FieldHandle down(dwre::testing::symmetric_1d(), 1);
  down.set_override(LatticeVector{0}, 1);
  down.set_override(LatticeVector{-1}, 0);
  auto bt = backtrack_times(run_walk(down, 20), l, 3);
  CHECK(bt.times == std::vector<std::size_t>{1, 3, 5});
  auto stopped = backtrack_times(run_walk(down, 20), l, 3, PathMode::stopped);
  CHECK(stopped.times == std::vector<std::size_t>{1, kNever, kNever});
}

TEST_CASE("random walks respect the path invariants") {
  auto spec = dwre::testing::axis_2d(0.4);
  FieldHandle base(spec, 2024);
  Direction l{1.0, 0.0};
  for (std::uint64_t s = 0; s < 300; ++s) {
    auto field = base.with_seed(s);
    auto t = run_walk(field, 200);
    REQUIRE(t.positions.front().is_zero());
    for (std::size_t n = 1; n < t.positions.size(); ++n) {
      auto step = t.positions[n] - t.positions[n - 1];
      CHECK(step == field.sample_eta(t.positions[n - 1]));
    }
    if (t.looped()) {
      CHECK(t.loop_period() >= 1);
      CHECK(t.positions[*t.tau] == t.positions[*t.theta]);
      for (std::size_t n = *t.theta; n < *t.theta + 10; ++n)
        for (std::size_t k = 1; k < 4; ++k) CHECK(position_at(t, n + k * t.loop_period()) == position_at(t, n));
    }
    for (std::size_t n = 0; n <= 200; ++n) {
      auto x = position_at(t, n);
      CHECK(x.norm() <= spec.bound() * static_cast<double>(n) + 1e-12);
      // {X_n . l >= n k} implies {T_{nk} <= n}
      const double k = 0.1;
      if (reaches_level(x.dot(l.span()), k * n)) CHECK(hitting_time(t, l, k * n) <= n);
    }
    auto again = run_walk(field, 200);
    CHECK(again.positions == t.positions);
  }
}

TEST_CASE("walk metadata dumps") {
  auto t = run_walk(square_field(), 10);
  CHECK(trajectory_json(t) == "{\"tau\":4,\"theta\":0,\"period\":4,\"horizon\":10}");
  CHECK(trajectory_csv(t, 2) == "n,x1,x2\n0,0,0\n1,1,0\n2,1,1\n");
}
