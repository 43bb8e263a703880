#include <doctest.h>

#include <cmath>
#include <set>

#include <json.hpp>

#include "dwre/rng.hpp"
#include "dwre/teleport.hpp"

using namespace dwre;
using namespace dwre::cont;

namespace {

TeleportWorld quiet_world(std::uint64_t seed = 1) {
  auto tele = default_teleport_config(2);
  tele.intensity = 0.0;
  return TeleportWorld(default_field_model(2), tele, seed);
}

void fill(TeleportWorld& w, std::int64_t x0, std::int64_t x1, std::int64_t y0, std::int64_t y1, const Vec& b) {
  for (std::int64_t x = x0; x <= x1; ++x)
    for (std::int64_t y = y0; y <= y1; ++y) w.set_field(LatticeVector{x, y}, b);
}

bool has_event(const ContinuousTrajectory& t, TraceKind kind, std::optional<std::uint64_t> id = std::nullopt) {
  for (const auto& e : t.events)
    if (e.kind == kind && (!id || e.teleport_id == id)) return true;
  return false;
}

}  // namespace

TEST_CASE("default models satisfy their own bounds") {
  for (std::size_t d = 1; d <= 3; ++d) {
    auto f = default_field_model(d);
    CHECK(validate_field(f).empty());
    CHECK(validate_teleports(default_teleport_config(d), d, f.bound).empty());
  }
  auto f = default_field_model(2);
  CHECK(f.delta0 == doctest::Approx(0.5 * std::cos(M_PI / 8)).epsilon(1e-3));
}

TEST_CASE("configuration errors name the bound") {
  auto f = default_field_model(2);
  auto t = default_teleport_config(2);
  t.radius = 0.2;
  try {
    TeleportWorld w(f, t, 1);
    FAIL("expected rejection");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("radius") != std::string::npos);
  }
  t = default_teleport_config(2);
  t.dwell = t.radius / 4.0;
  CHECK_THROWS_AS(TeleportWorld(f, t, 1), std::invalid_argument);
  t = default_teleport_config(2);
  t.jumps = {{5.0, 0.0}};
  auto msgs = validate_teleports(t, 2, 1.0);
  REQUIRE(msgs.size() == 1);
  CHECK(msgs[0].find("jump vectors") != std::string::npos);
  f.delta0 = 0.95;
  CHECK_FALSE(validate_field(f).empty());
}

TEST_CASE("no intensity, no teleports") {
  auto w = quiet_world();
  for (std::int64_t x = -20; x <= 20; ++x)
    for (std::int64_t y = -20; y <= 20; ++y) CHECK(w.balls_in(LatticeVector{x, y}).empty());
}

TEST_CASE("teleport counts follow the Poisson mean") {
  auto tele = default_teleport_config(2);
  tele.intensity = 0.7;
  TeleportWorld w(default_field_model(2), tele, 99);
  const int n = 10000;
  std::size_t total = 0;
  for (int i = 0; i < n; ++i) {
    auto balls = w.balls_in(LatticeVector{i % 100, i / 100});
    for (const auto& b : balls) {
      CHECK(b.center[0] >= i % 100);
      CHECK(b.center[0] < i % 100 + 1);
    }
    total += balls.size();
  }
  // two jump types per cell
  const double mean = static_cast<double>(total) / (2.0 * n);
  CHECK(std::abs(mean - 0.7) <= 3.0 * std::sqrt(0.7 / (2.0 * n)));
}

TEST_CASE("world queries are pure") {
  TeleportWorld w(default_field_model(2), default_teleport_config(2), 5);
  LatticeVector z{3, -7};
  auto a = w.balls_in(z), b = w.with_seed(5).balls_in(z);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].center == b[i].center);
    CHECK(a[i].id == b[i].id);
  }
  CHECK(w.field_at(z) == w.field_at(z));
  CHECK(w.initial_position() == w.with_seed(5).initial_position());
  CHECK(w.y(17) == w.y(17));
  auto x = w.initial_position();
  for (double v : x) CHECK((v >= 0.0 && v < 1.0));
}

TEST_CASE("nearest cube breaks ties toward the smaller index") {
  CHECK(nearest_cube({2.3, -0.2}) == LatticeVector{2, -1});
  CHECK(nearest_cube({2.0, 3.5}) == LatticeVector{1, 3});
  CHECK(nearest_cube({-1.0, 0.0}) == LatticeVector{-2, -1});
}

TEST_CASE("constant field gives one straight line") {
  auto w = quiet_world();
  const Vec v{0.6, 0.8};
  fill(w, -1, 6, -1, 8, v);
  const auto start = w.initial_position();
  auto t = simulate(w, 5.0);
  for (const auto& p : t.pieces) {
    CHECK_FALSE(p.jump);
    CHECK(p.v == v);
  }
  for (double s : {0.0, 0.7, 2.5, 5.0}) {
    auto x = t.position_at(s);
    CHECK(x[0] == doctest::Approx(start[0] + s * v[0]).epsilon(1e-12));
    CHECK(x[1] == doctest::Approx(start[1] + s * v[1]).epsilon(1e-12));
  }
  const Vec l{0.6, 0.8};
  auto hit = hitting_time(t, l, 2.0);
  REQUIRE(hit);
  CHECK(*hit == doctest::Approx(2.0 - (start[0] * 0.6 + start[1] * 0.8)).epsilon(1e-12));
  CHECK_FALSE(hitting_time(t, l, 7.0));
  CHECK_FALSE(backtrack_time(t, l));
}

TEST_CASE("sliding on a face where both fields point into it") {
  auto w = quiet_world();
  fill(w, -2, 4, -2, -1, {0.6, 0.8});
  fill(w, -2, 4, 0, 2, {0.6, -0.8});
  w.set_initial_position({0.1, -0.4});
  auto t = simulate(w, 3.0);
  // reaches y = 0 at t = 0.5, then slides with speed 0.6 along e1
  auto x = t.position_at(2.5);
  CHECK(x[1] == 0.0);
  CHECK(x[0] == doctest::Approx(0.1 + 0.3 + 2.0 * 0.6).epsilon(1e-12));
}

TEST_CASE("opposing normal fields bring the particle to rest") {
  auto w = quiet_world();
  fill(w, -2, 0, -2, 2, {1.0, 0.0});
  fill(w, 1, 3, -2, 2, {-1.0, 0.0});
  w.set_initial_position({0.5, 0.5});
  auto t = simulate(w, 10.0);
  CHECK(t.trapped_at_rest);
  CHECK(has_event(t, TraceKind::rest));
  auto x = t.position_at(10.0);
  CHECK(x[0] == 1.0);
  CHECK(x[1] == 0.5);
}

TEST_CASE("a chord through the half-radius ball always reaches a decision") {
  CounterRng rng(StreamKey(3, "capture"));
  auto base = quiet_world(7);
  const double r = base.teleports().radius;
  for (int run = 0; run < 100; ++run) {
    TeleportWorld w = base.with_seed(1000 + run);
    Vec c{0.2 + 0.6 * rng.uniform(), 0.2 + 0.6 * rng.uniform()};
    const double a = 2.0 * M_PI * rng.uniform();
    const Vec dir{std::cos(a), std::sin(a)};
    const double off = (rng.uniform() - 0.5) * r;  // perpendicular offset, |off| < r/2
    fill(w, -2, 2, -2, 2, dir);
    Ball b{c, 0, 0};
    w.set_balls(LatticeVector{0, 0}, {b});
    const auto id = w.balls_in(LatticeVector{0, 0}).front().id;
    w.set_initial_position({c[0] - 1.5 * r * dir[0] - off * dir[1], c[1] - 1.5 * r * dir[1] + off * dir[0]});
    auto t = simulate(w, 4.0 * r);
    CHECK(has_event(t, TraceKind::ball_enter, id));
    CHECK(has_event(t, TraceKind::dwell_complete, id));
  }
}

TEST_CASE("a stay decision leaves the position unchanged") {
  auto w = quiet_world(11);
  const double t0 = w.teleports().dwell;
  fill(w, -2, 2, -2, 2, {0.1, 0.0});
  w.set_balls(LatticeVector{0, 0}, {Ball{{0.5, 0.5}, 0, 0}});
  w.set_initial_position({0.45, 0.5});
  for (std::int64_t j = 0; j < 100; ++j) w.set_y(j, std::nullopt);
  auto t = simulate(w, 0.5);
  CHECK(t.jumps == 0);
  std::set<std::int64_t> used;
  std::size_t decisions = 0;
  for (const auto& e : t.events) {
    if (e.kind != TraceKind::dwell_complete) continue;
    ++decisions;
    CHECK(used.insert(*e.y_index).second);
  }
  // the ball of radius r is crossed at speed 0.1: many dwell periods
  CHECK(decisions >= 10);
  CHECK(t.position_at(3.0 * t0)[0] == doctest::Approx(0.45 + 0.3 * t0));
}

TEST_CASE("simultaneous occupancy suppresses the jump") {
  auto w = quiet_world(12);
  const double t0 = w.teleports().dwell;
  fill(w, -2, 2, -2, 2, {0.01, 0.0});
  w.set_balls(LatticeVector{0, 0}, {Ball{{0.5, 0.5}, 0, 1}, Ball{{0.52, 0.5}, 1, 2}});
  w.set_initial_position({0.51, 0.5});
  for (std::int64_t j = 0; j < 100; ++j) w.set_y(j, Vec{0.5, 0.5});
  auto t = simulate(w, 1.5 * t0);
  CHECK(has_event(t, TraceKind::suppress));
  CHECK(t.jumps == 0);
  CHECK(t.suppressed >= 1);
}

TEST_CASE("a jump lands in the cube nearest to position plus u") {
  auto w = quiet_world(13);
  const double t0 = w.teleports().dwell;
  fill(w, -2, 7, -2, 2, {0.01, 0.0});
  w.set_balls(LatticeVector{0, 0}, {Ball{{0.5, 0.5}, 0, 0}});
  w.set_initial_position({0.5, 0.5});
  w.set_y(1, Vec{0.25, 0.75});
  auto t = simulate(w, 2.5 * t0);
  REQUIRE(t.jumps == 1);
  auto x = t.position_at(2.5 * t0);
  // first decision at t0 reads Y_1; u_1 = 5 e1 and 0.5 + 0.01 t0 + 5 lies in [5, 6)
  CHECK(x[0] == doctest::Approx(5.25 + 0.01 * 1.5 * t0));
  CHECK(x[1] == doctest::Approx(0.75));
}

TEST_CASE("Y indices decide at most one jump on busy paths") {
  auto tele = default_teleport_config(2);
  tele.intensity = 4.0;
  TeleportWorld base(default_field_model(2), tele, 1);
  std::size_t jumps = 0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    auto t = simulate(base.with_seed(s), 50.0);
    std::set<std::int64_t> used;
    for (const auto& e : t.events)
      if (e.kind == TraceKind::dwell_complete) CHECK(used.insert(*e.y_index).second);
    CHECK(used.size() == t.final_state.consumed.size());
    jumps += t.jumps;
    // speed bound between jumps
    for (const auto& p : t.pieces)
      if (!p.jump) CHECK(std::hypot(p.v[0], p.v[1]) <= 1.0 + 1e-12);
  }
  CHECK(jumps > 0);
}

TEST_CASE("simulation is deterministic") {
  TeleportWorld w(default_field_model(2), default_teleport_config(2), 77);
  auto a = simulate(w, 100.0), b = simulate(w, 100.0);
  CHECK(events_jsonl(a) == events_jsonl(b));
  CHECK(a.pieces.size() == b.pieces.size());
}

TEST_CASE("event log is one JSON object per line") {
  TeleportWorld w(default_field_model(2), default_teleport_config(2), 3);
  auto t = simulate(w, 20.0);
  auto text = events_jsonl(t);
  std::size_t lines = 0, pos = 0;
  while ((pos = text.find('\n', pos)) != std::string::npos) ++lines, ++pos;
  CHECK(lines == t.events.size());
  REQUIRE_FALSE(t.events.empty());
  auto first = nlohmann::json::parse(text.substr(0, text.find('\n')));
  CHECK(first.contains("kind"));
  CHECK(first["position"].size() == 2);
}

TEST_CASE("trap holds every start") {
  for (std::uint64_t s = 0; s < 20; ++s) {
    auto w = trap_scenario(2, s);
    auto t = simulate(w, 1000.0);
    CHECK(stays_in_cube(t, LatticeVector{0, 0}));
    CHECK(t.jumps == 0);
    auto hit = hitting_time(t, {1.0, 0.0}, 1.5);
    CHECK_FALSE(hit);
  }
  auto w3 = trap_scenario(3, 4, LatticeVector{2, 0, -1});
  CHECK(stays_in_cube(simulate(w3, 100.0), LatticeVector{2, 0, -1}));
}

TEST_CASE("tunnel transit time") {
  for (double y0 : {-4.5, -1.3, 0.0, 0.7, 4.4}) {
    auto tun = tunnel_scenario(2, 9, {-0.5, y0});
    auto t = simulate(tun.world, 50.0);
    auto in = hitting_time(t, {1.0, 0.0}, 0.0);
    auto out = hitting_time(t, {1.0, 0.0}, static_cast<double>(tun.length));
    REQUIRE(in);
    REQUIRE(out);
    const double transit = *out - *in;
    CHECK(transit <= tun.speed_bound);
    CHECK(transit == doctest::Approx(tun.length / tun.world.field().delta0).epsilon(1e-9));
  }
}

TEST_CASE("crossing record on a sawtooth path") {
  auto w = quiet_world();
  for (std::int64_t y = -1; y <= 12; ++y) fill(w, -4, 3, y, y, y % 2 == 0 ? Vec{-0.8, 0.6} : Vec{0.8, 0.6});
  w.set_initial_position({0.5, 0.0});
  auto t = simulate(w, 10.0 / 0.6);
  const double wdt = 0.75;
  auto rec = crossing_record(t, {1.0, 0.0}, wdt, 1.0);
  // 10 rows: 5 left sweeps, each crossing the strip
  CHECK(rec.f.size() >= 5);
  for (std::size_t i = 0; i + 1 < rec.f.size(); ++i) {
    CHECK(rec.g[i] < rec.f[i]);
    CHECK(rec.f[i] - rec.g[i] >= wdt - 1e-12);
    if (i + 1 < rec.g.size()) CHECK(rec.f[i] < rec.g[i + 1]);
  }
  const std::size_t m = rec.f.size() - 2;
  CHECK(rec.f[m] - rec.f[0] >= wdt * m - 1e-9);

  auto straight = quiet_world();
  fill(straight, -1, 8, -1, 1, {1.0, 0.0});
  auto s = simulate(straight, 5.0);
  auto r2 = crossing_record(s, {1.0, 0.0}, 0.6, 1.0);
  CHECK(r2.f.size() == 1);
  CHECK(std::isinf(r2.f[0]));
  CHECK_THROWS_AS(crossing_record(s, {1.0, 0.0}, 0.4, 1.0), std::invalid_argument);
}

TEST_CASE("crossing bounds hold on random paths with teleports") {
  TeleportWorld base(default_field_model(2), default_teleport_config(2), 21);
  std::size_t checked = 0;
  for (std::uint64_t s = 0; s < 50; ++s) {
    auto t = simulate(base.with_seed(s), 100.0, {.log_events = false});
    auto rec = crossing_record(t, {1.0, 0.0}, 0.75, 1.0);
    checked += rec.checked_pairs;
  }
  CHECK(checked > 0);
}

TEST_CASE("continuous rate curves") {
  TeleportWorld base(default_field_model(2), default_teleport_config(2), 2);
  McOptions opt{4, 200, 1};
  auto curves = estimate_continuous(base, opt, {1.0, 0.0}, {0.0, 0.3, 1000.0}, {5.0, 10.0},
                                    {ContinuousKind::tail, ContinuousKind::hit, ContinuousKind::hit_noback});
  REQUIRE(curves.size() == 6);
  for (const auto& c : curves) {
    CHECK(c.tail_not_hit == 0);
    CHECK(c.noback_not_hit == 0);
    CHECK(c.points[2].censored);
    CHECK(c.points[0].value <= 1e-12);
  }
  // k = 0 hit is certain: the start lies in [0,1)^d
  CHECK(curves[1].points[0].value == 0.0);
  opt.workers = 3;
  auto again = estimate_continuous(base, opt, {1.0, 0.0}, {0.0, 0.3, 1000.0}, {5.0, 10.0},
                                   {ContinuousKind::tail, ContinuousKind::hit, ContinuousKind::hit_noback});
  CHECK(continuous_rate_csv(curves) == continuous_rate_csv(again));
  CHECK_THROWS_AS(estimate_continuous(base, {1, 50, 1}, {1.0, 0.0}, {0.1}, {1.0}, {ContinuousKind::tail}),
                  std::invalid_argument);
}

TEST_CASE("config sections") {
  auto cfg = Config::parse(
      "[field]\ndimension = 2\nL = 2\n[teleport]\nr = 0.1\nlambda0 = 0.25\njump = 6 0\njump = 0 6\n");
  auto f = field_from_config(cfg);
  CHECK(f.bound == 2.0);
  CHECK(f.vectors.size() == 8);
  auto t = teleport_from_config(cfg, f);
  CHECK(t.radius == 0.1);
  CHECK(t.dwell < 0.1 / 8.0);
  CHECK(t.jumps.size() == 2);
  CHECK_NOTHROW(TeleportWorld(f, t, 1));
}
