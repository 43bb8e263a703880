#include "dwre/teleport.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "dwre/nice_set.hpp"
#include "dwre/parallel.hpp"
#include "dwre/rng.hpp"

namespace dwre::cont {

namespace {

constexpr int kValidationResolution = 1024;

double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(const Vec& a) { return std::sqrt(dot(a, a)); }

std::string fmt(double x) { return format_number(x); }

LatticeVector floor_cell(const Vec& x) {
  LatticeVector z(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) z[i] = static_cast<std::int64_t>(std::floor(x[i]));
  return z;
}

std::vector<LatticeVector> block(const LatticeVector& centre, std::int64_t radius) {
  const std::size_t d = centre.dim();
  std::vector<LatticeVector> out;
  LatticeVector off(d);
  for (std::size_t i = 0; i < d; ++i) off[i] = -radius;
  for (;;) {
    out.push_back(centre + off);
    std::size_t i = d;
    while (i > 0) {
      --i;
      if (off[i] < radius) {
        ++off[i];
        break;
      }
      off[i] = -radius;
      if (i == 0) return out;
    }
  }
}

double ellipticity_floor(const std::vector<Vec>& vectors) {
  auto res = nice::rho_min_real(vectors, kValidationResolution);
  return res.estimate_only ? res.kappa : res.kappa_lower;
}

}  // namespace

FieldModel default_field_model(std::size_t dim, double bound) {
  if (dim == 0 || dim > 4) throw std::invalid_argument("field model: dimension must be in 1..4");
  FieldModel f;
  f.dimension = dim;
  f.bound = bound;
  auto add = [&](Vec v) {
    const double n = norm(v);
    for (double& x : v) x *= bound / n;
    f.vectors.push_back(std::move(v));
  };
  if (dim == 2) {
    for (int k = 0; k < 8; ++k) {
      const double a = std::numbers::pi * k / 4.0;
      add({std::cos(a), std::sin(a)});
    }
  } else {
    for (std::size_t i = 0; i < dim; ++i) {
      for (double s : {1.0, -1.0}) {
        Vec v(dim, 0.0);
        v[i] = s;
        add(v);
      }
    }
    if (dim == 3) {
      for (int m = 0; m < 8; ++m) add({m & 1 ? -1.0 : 1.0, m & 2 ? -1.0 : 1.0, m & 4 ? -1.0 : 1.0});
    }
  }
  f.probabilities.assign(f.vectors.size(), 1.0 / static_cast<double>(f.vectors.size()));
  f.c = f.probabilities.front();
  f.delta0 = 0.5 * nice::rho_min_real(f.vectors, kValidationResolution).kappa;
  return f;
}

TeleportConfig default_teleport_config(std::size_t dim, double bound) {
  TeleportConfig t;
  t.radius = 0.85 / (4.0 * std::sqrt(static_cast<double>(dim)));
  t.dwell = 0.8 * t.radius / (4.0 * bound);
  t.skip = 0.5;
  t.intensity = 0.5;
  for (std::size_t i = 0; i < dim; ++i) {
    Vec u(dim, 0.0);
    u[i] = static_cast<double>(2 * dim + 1);
    t.jumps.push_back(u);
  }
  return t;
}

std::vector<std::string> validate_field(const FieldModel& f) {
  std::vector<std::string> out;
  if (f.dimension == 0 || f.dimension > 4) {
    out.push_back("dimension " + std::to_string(f.dimension) + " outside 1..4");
    return out;
  }
  if (f.vectors.empty()) out.push_back("field law has no vectors");
  if (f.vectors.size() != f.probabilities.size()) out.push_back("field law: vector and probability counts differ");
  if (!(f.bound > 0.0) || !std::isfinite(f.bound)) out.push_back("bound L must be positive and finite");
  if (!(f.delta0 > 0.0)) out.push_back("delta0 must be positive");
  if (!(f.c > 0.0) || f.c > 1.0) out.push_back("c must lie in (0, 1]");
  if (!out.empty()) return out;
  double total = 0.0;
  std::vector<Vec> likely;
  for (std::size_t i = 0; i < f.vectors.size(); ++i) {
    const auto& v = f.vectors[i];
    if (v.size() != f.dimension) {
      out.push_back("field vector " + std::to_string(i) + " has the wrong dimension");
      continue;
    }
    if (norm(v) > f.bound * (1.0 + 1e-12)) {
      out.push_back("field vector " + std::to_string(i) + " has norm " + fmt(norm(v)) + " > L = " + fmt(f.bound));
    }
    if (!(f.probabilities[i] > 0.0)) out.push_back("field probability " + std::to_string(i) + " is not positive");
    total += f.probabilities[i];
    if (f.probabilities[i] >= f.c) likely.push_back(v);
  }
  if (std::abs(total - 1.0) > 1e-9) out.push_back("field probabilities sum to " + fmt(total) + ", not 1");
  if (!out.empty()) return out;
  if (likely.empty()) {
    out.push_back("no field vector has probability >= c");
    return out;
  }
  const double kappa = ellipticity_floor(likely);
  if (!(kappa > f.delta0)) {
    out.push_back("directional bound fails: min over l of max v . l among vectors with probability >= c is " +
                  fmt(kappa) + ", not > delta0 = " + fmt(f.delta0));
  }
  return out;
}

std::vector<std::string> validate_teleports(const TeleportConfig& t, std::size_t dim, double bound) {
  std::vector<std::string> out;
  const double sd = std::sqrt(static_cast<double>(dim));
  const double rmax = 1.0 / (4.0 * sd);
  if (!(t.radius > 0.0 && t.radius < rmax)) {
    out.push_back("radius r = " + fmt(t.radius) + " must lie in (0, 1/(4 sqrt d)) = (0, " + fmt(rmax) + ")");
  }
  const double tmax = t.radius / (4.0 * bound);
  if (!(t.dwell > 0.0 && t.dwell < tmax)) {
    out.push_back("dwell t0 = " + fmt(t.dwell) + " must lie in (0, r/(4L)) = (0, " + fmt(tmax) + ")");
  }
  if (!(t.skip > 0.0 && t.skip < 1.0)) out.push_back("skip probability c3 = " + fmt(t.skip) + " must lie in (0, 1)");
  if (!(t.intensity >= 0.0) || !std::isfinite(t.intensity)) {
    out.push_back("intensity lambda0 = " + fmt(t.intensity) + " must be finite and >= 0");
  }
  if (t.jumps.empty()) {
    out.push_back("at least one jump vector is required");
    return out;
  }
  std::vector<Vec> both;
  for (std::size_t i = 0; i < t.jumps.size(); ++i) {
    if (t.jumps[i].size() != dim) {
      out.push_back("jump vector " + std::to_string(i) + " has the wrong dimension");
      return out;
    }
    both.push_back(t.jumps[i]);
    Vec neg = t.jumps[i];
    for (double& x : neg) x = -x;
    both.push_back(neg);
  }
  const double reach = ellipticity_floor(both);
  const double need = 2.0 * sd + 2.0 * t.radius;
  if (!(reach > need)) {
    out.push_back("jump vectors: min over l of max |u . l| is " + fmt(reach) + ", not > 2 sqrt d + 2r = " +
                  fmt(need));
  }
  return out;
}

TeleportWorld::TeleportWorld(FieldModel field, TeleportConfig tele, std::uint64_t seed) : seed_(seed) {
  auto problems = validate_field(field);
  if (problems.empty()) {
    for (auto& p : validate_teleports(tele, field.dimension, field.bound)) problems.push_back(std::move(p));
  }
  if (!problems.empty()) {
    std::string msg = "invalid continuous model:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw std::invalid_argument(msg);
  }
  auto data = std::make_shared<Data>();
  double acc = 0.0;
  for (double p : field.probabilities) data->cumulative.push_back(acc += p);
  data->field = std::move(field);
  data->tele = std::move(tele);
  data_ = std::move(data);
}

TeleportWorld TeleportWorld::with_seed(std::uint64_t seed) const {
  TeleportWorld w = *this;
  w.seed_ = seed;
  return w;
}

Vec TeleportWorld::field_at(const LatticeVector& cell) const {
  if (auto it = field_overrides_.find(cell); it != field_overrides_.end()) return it->second;
  CounterRng rng(StreamKey(seed_, "field").add_coords(cell.coords()));
  const double u = rng.uniform() * data_->cumulative.back();
  auto it = std::upper_bound(data_->cumulative.begin(), data_->cumulative.end(), u);
  std::size_t idx = std::min<std::size_t>(it - data_->cumulative.begin(), data_->cumulative.size() - 1);
  return data_->field.vectors[idx];
}

std::vector<Ball> TeleportWorld::balls_in(const LatticeVector& cell) const {
  if (auto it = ball_overrides_.find(cell); it != ball_overrides_.end()) return it->second;
  std::vector<Ball> out;
  const auto& tele = data_->tele;
  if (tele.intensity <= 0.0) return out;
  for (std::size_t type = 0; type < tele.jumps.size(); ++type) {
    StreamKey key = StreamKey(seed_, "teleport").add_coords(cell.coords()).add(type);
    CounterRng rng(key);
    const std::uint32_t count = rng.poisson(tele.intensity);
    for (std::uint32_t j = 0; j < count; ++j) {
      Ball b;
      b.type = type;
      b.center.resize(dim());
      for (std::size_t i = 0; i < dim(); ++i) b.center[i] = static_cast<double>(cell[i]) + rng.uniform();
      b.id = StreamKey(key.value(), "ball").add(j).value();
      out.push_back(std::move(b));
    }
  }
  return out;
}

Vec TeleportWorld::initial_position() const {
  if (start_override_) return *start_override_;
  CounterRng rng(StreamKey(seed_, "start"));
  Vec x(dim());
  for (double& v : x) v = rng.uniform();
  return x;
}

std::optional<Vec> TeleportWorld::y(std::int64_t index) const {
  if (auto it = y_overrides_.find(index); it != y_overrides_.end()) return it->second;
  CounterRng rng(StreamKey(seed_, "Y").add(static_cast<std::uint64_t>(index)));
  if (rng.uniform() < data_->tele.skip) return std::nullopt;
  Vec v(dim());
  for (double& x : v) x = rng.uniform();
  return v;
}

void TeleportWorld::set_field(const LatticeVector& cell, Vec value) {
  if (value.size() != dim()) throw std::invalid_argument("set_field: dimension mismatch");
  if (norm(value) > data_->field.bound * (1.0 + 1e-12)) throw std::invalid_argument("set_field: |b| exceeds L");
  field_overrides_[cell] = std::move(value);
}

void TeleportWorld::set_balls(const LatticeVector& cell, std::vector<Ball> balls) {
  for (auto& b : balls) {
    if (b.center.size() != dim() || b.type >= data_->tele.jumps.size()) {
      throw std::invalid_argument("set_balls: bad centre or type");
    }
    if (b.id == 0) b.id = StreamKey(seed_, "ball-override").add_coords(cell.coords()).add(b.type).value();
  }
  ball_overrides_[cell] = std::move(balls);
}

void TeleportWorld::set_initial_position(Vec x) {
  if (x.size() != dim()) throw std::invalid_argument("set_initial_position: dimension mismatch");
  start_override_ = std::move(x);
}

void TeleportWorld::set_y(std::int64_t index, std::optional<Vec> value) { y_overrides_[index] = std::move(value); }

LatticeVector nearest_cube(const Vec& x) {
  LatticeVector z(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) z[i] = static_cast<std::int64_t>(std::ceil(x[i] - 1.0));
  return z;
}

std::string to_string(TraceKind kind) {
  switch (kind) {
    case TraceKind::segment: return "segment";
    case TraceKind::cell_exit: return "cell_exit";
    case TraceKind::ball_enter: return "ball_enter";
    case TraceKind::ball_exit: return "ball_exit";
    case TraceKind::dwell_complete: return "dwell_complete";
    case TraceKind::jump: return "jump";
    case TraceKind::suppress: return "suppress";
    case TraceKind::rest: return "rest";
  }
  return "?";
}

Vec ContinuousTrajectory::position_at(double t) const {
  if (pieces.empty() || t <= pieces.front().t0) return start;
  // last piece with t0 <= t; jumps at t are included (right-continuous)
  auto it = std::upper_bound(pieces.begin(), pieces.end(), t, [](double v, const Piece& p) { return v < p.t0; });
  const Piece& p = *std::prev(it);
  if (p.jump) return p.x1;
  Vec x = p.x0;
  const double s = std::min(t, p.t1) - p.t0;
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += s * p.v[i];
  return x;
}

namespace {

struct CellInfo {
  Vec field;
  std::vector<Ball> balls;
};

struct Active {
  Ball ball;
  double start = 0.0;
};

class Simulator {
 public:
  Simulator(const TeleportWorld& world, double t_max, const SimulateOptions& opt)
      : world_(world), opt_(opt), d_(world.dim()), L_(world.field().bound), t0_(world.teleports().dwell),
        r_(world.teleports().radius) {
    traj_.t_max = t_max;
    traj_.start = world.initial_position();
    x_ = traj_.start;
  }

  ContinuousTrajectory run() {
    const double tol_v = 1e-12 * L_;
    refresh_membership();
    std::size_t stalls = 0;
    std::size_t events = 0;
    while (t_ < traj_.t_max) {
      if (++events > opt_.max_events) throw std::runtime_error("simulate: event budget exhausted");
      LatticeVector cell(d_);
      Vec v = motion(cell);
      const bool resting = norm(v) <= tol_v;
      if (resting) std::fill(v.begin(), v.end(), 0.0);
      if (resting && active_.empty()) {
        push_piece(traj_.t_max, v);
        log(TraceKind::rest, cell);
        traj_.trapped_at_rest = true;
        t_ = traj_.t_max;
        break;
      }

      // candidate times, by category
      double t_dwell = kInfinity, t_exit = kInfinity, t_enter = kInfinity, t_face = kInfinity;
      std::vector<double> face_t(d_, kInfinity), face_x(d_, 0.0);
      for (const auto& [id, a] : active_) t_dwell = std::min(t_dwell, std::max(t_, a.start + t0_));
      std::vector<std::pair<double, const Ball*>> exits, enters;
      if (!resting) {
        for (const auto& nb : block(cell, 1)) {
          for (const auto& b : info(nb).balls) {
            const bool inside = active_.count(b.id) != 0;
            auto s = ball_time(b, v, inside);
            if (!s) continue;
            const double te = t_ + *s;
            (inside ? exits : enters).push_back({te, &b});
            (inside ? t_exit : t_enter) = std::min(inside ? t_exit : t_enter, te);
          }
        }
        for (std::size_t j = 0; j < d_; ++j) {
          face_t[j] = face_time(j, v[j]);
          face_x[j] = v[j] == 0.0 ? 0.0 : face_target(j, v[j]);
          t_face = std::min(t_face, face_t[j]);
        }
      }
      const double t_next = std::min({t_dwell, t_exit, t_enter, t_face, traj_.t_max});
      const double tol = 1e-12 * std::max(1.0, t_next);
      if (t_next - t_ <= tol) {
        if (++stalls > 100000) throw std::runtime_error("simulate: no progress at t = " + fmt(t_));
      } else {
        stalls = 0;
      }
      advance(t_next, v);

      if (t_dwell <= t_next + tol) {
        complete_dwell(cell);
      } else if (t_exit <= t_next + tol) {
        for (const auto& [te, b] : exits) {
          if (te <= t_next + tol) {
            active_.erase(b->id);
            log(TraceKind::ball_exit, cell, b->id);
          }
        }
      } else if (t_enter <= t_next + tol) {
        for (const auto& [te, b] : enters) {
          if (te <= t_next + tol && !active_.count(b->id)) {
            active_[b->id] = Active{*b, t_};
            log(TraceKind::ball_enter, cell, b->id);
          }
        }
      } else if (t_face <= t_next + tol) {
        for (std::size_t j = 0; j < d_; ++j) {
          if (face_t[j] <= t_next + tol) x_[j] = face_x[j];
        }
        LatticeVector next(d_);
        motion(next);
        log(TraceKind::cell_exit, next);
      }
    }
    traj_.final_state.position = x_;
    traj_.final_state.time = t_;
    for (const auto& [id, a] : active_) traj_.final_state.dwell[id] = a.start;
    traj_.final_state.consumed = consumed_;
    return std::move(traj_);
  }

 private:
  const CellInfo& info(const LatticeVector& z) {
    auto it = cache_.find(z);
    if (it != cache_.end()) return it->second;
    return cache_.emplace(z, CellInfo{world_.field_at(z), world_.balls_in(z)}).first->second;
  }

  const Vec& field(const LatticeVector& z) { return info(z).field; }

  // Velocity at x_ and the cell whose closure contains the motion.
  Vec motion(LatticeVector& cell) {
    const double tol = 1e-12 * L_;
    std::vector<std::size_t> faces;
    LatticeVector base(d_);
    for (std::size_t j = 0; j < d_; ++j) {
      base[j] = static_cast<std::int64_t>(std::floor(x_[j]));
      if (x_[j] == std::floor(x_[j])) faces.push_back(j);
    }
    if (faces.empty()) {
      cell = base;
      return field(base);
    }
    const std::size_t f = faces.size();
    auto adjacent = [&](std::size_t mask) {
      LatticeVector z = base;
      for (std::size_t b = 0; b < f; ++b)
        if (mask >> b & 1) z[faces[b]] -= 1;
      return z;
    };
    auto side = [](std::size_t mask, std::size_t b) { return (mask >> b & 1) ? -1.0 : 1.0; };

    // a cell whose field leaves the face into its own interior
    double best = tol;
    std::optional<std::size_t> chosen;
    for (std::size_t mask = 0; mask < (std::size_t{1} << f); ++mask) {
      const Vec& b = field(adjacent(mask));
      double margin = kInfinity;
      for (std::size_t k = 0; k < f; ++k) margin = std::min(margin, side(mask, k) * b[faces[k]]);
      if (margin > best) {
        best = margin;
        chosen = mask;
      }
    }
    if (chosen) {
      cell = adjacent(*chosen);
      return field(cell);
    }

    // sliding on one face, entering the interior in the remaining face coordinates
    best = -kInfinity;
    std::optional<Vec> slide;
    for (std::size_t k = 0; k < f; ++k) {
      const std::size_t j = faces[k];
      for (std::size_t mask = 0; mask < (std::size_t{1} << f); ++mask) {
        if (!(mask >> k & 1)) continue;  // mask marks the lower cell in coordinate j
        const LatticeVector lo = adjacent(mask), hi = adjacent(mask & ~(std::size_t{1} << k));
        const Vec &bl = field(lo), &bu = field(hi);
        if (!(bl[j] >= -tol && bu[j] <= tol)) continue;
        Vec v(d_);
        const double den = bu[j] - bl[j];
        const double alpha = den < 0.0 ? bu[j] / den : 0.5;
        for (std::size_t i = 0; i < d_; ++i) v[i] = alpha * bl[i] + (1.0 - alpha) * bu[i];
        v[j] = 0.0;
        double margin = kInfinity;
        for (std::size_t o = 0; o < f; ++o)
          if (o != k) margin = std::min(margin, side(mask, o) * v[faces[o]]);
        if (f > 1 && !(margin > tol)) continue;
        if (margin > best) {
          best = margin;
          slide = v;
          cell = lo;
        }
      }
    }
    if (slide) return *slide;

    // lowest-dimensional face: average of the adjacent fields, projected
    Vec v(d_, 0.0);
    const double w = 1.0 / static_cast<double>(std::size_t{1} << f);
    for (std::size_t mask = 0; mask < (std::size_t{1} << f); ++mask) {
      const Vec& b = field(adjacent(mask));
      for (std::size_t i = 0; i < d_; ++i) v[i] += w * b[i];
    }
    for (std::size_t j : faces) v[j] = 0.0;
    cell = adjacent((std::size_t{1} << f) - 1);
    return v;
  }

  double face_target(std::size_t j, double vj) const {
    const double fl = std::floor(x_[j]);
    if (x_[j] == fl) return vj > 0.0 ? fl + 1.0 : fl - 1.0;
    return vj > 0.0 ? fl + 1.0 : fl;
  }

  double face_time(std::size_t j, double vj) const {
    if (vj == 0.0) return kInfinity;
    return t_ + std::max(0.0, (face_target(j, vj) - x_[j]) / vj);
  }

  std::optional<double> ball_time(const Ball& b, const Vec& v, bool inside) const {
    const double a = dot(v, v);
    if (a == 0.0) return std::nullopt;
    Vec rel(d_);
    for (std::size_t i = 0; i < d_; ++i) rel[i] = x_[i] - b.center[i];
    const double hb = dot(rel, v);
    const double cc = dot(rel, rel) - r_ * r_;
    const double disc = hb * hb - a * cc;
    if (inside) {
      if (disc <= 0.0) return 0.0;
      return std::max(0.0, (-hb + std::sqrt(disc)) / a);
    }
    if (disc <= 0.0) return std::nullopt;
    const double s1 = (-hb - std::sqrt(disc)) / a, s2 = (-hb + std::sqrt(disc)) / a;
    if (s2 <= 1e-12 || s1 < -1e-12) return std::nullopt;
    return std::max(0.0, s1);
  }

  void advance(double t, const Vec& v) {
    if (t > t_) {
      push_piece(t, v);
      for (std::size_t i = 0; i < d_; ++i) x_[i] += (t - t_) * v[i];
      t_ = t;
    }
  }

  void push_piece(double t1, const Vec& v) {
    Piece p;
    p.t0 = t_;
    p.t1 = t1;
    p.x0 = x_;
    p.v = v;
    traj_.pieces.push_back(std::move(p));
  }

  void refresh_membership() {
    active_.clear();
    for (const auto& nb : block(floor_cell(x_), 1)) {
      for (const auto& b : info(nb).balls) {
        double s = 0.0;
        for (std::size_t i = 0; i < d_; ++i) s += (x_[i] - b.center[i]) * (x_[i] - b.center[i]);
        if (s < r_ * r_) {
          active_[b.id] = Active{b, t_};
          log(TraceKind::ball_enter, floor_cell(x_), b.id);
        }
      }
    }
  }

  void complete_dwell(const LatticeVector& cell) {
    ++traj_.dwell_decisions;
    const double tol = 1e-12 * std::max(1.0, t_);
    if (active_.size() >= 2) {
      ++traj_.suppressed;
      std::optional<std::uint64_t> id;
      for (const auto& [bid, a] : active_)
        if (a.start + t0_ <= t_ + tol) id = bid;
      log(TraceKind::suppress, cell, id);
      for (auto& [bid, a] : active_) a.start = t_;
      return;
    }
    Active& a = active_.begin()->second;
    // decisions on one timer are exactly t0 apart; the nudge keeps rounding
    // from mapping two of them to the same index
    const auto index = static_cast<std::int64_t>(std::floor(t_ / t0_ + 1e-9));
    if (!consumed_.insert(index).second) {
      throw std::logic_error("simulate: Y index " + std::to_string(index) + " already decided a jump");
    }
    auto y = world_.y(index);
    log(TraceKind::dwell_complete, cell, a.ball.id, index);
    if (!y) {
      a.start = t_;
      return;
    }
    const Vec& u = world_.teleports().jumps[a.ball.type];
    Vec target(d_);
    for (std::size_t i = 0; i < d_; ++i) target[i] = x_[i] + u[i];
    const LatticeVector cube = nearest_cube(target);
    Piece p;
    p.t0 = p.t1 = t_;
    p.x0 = x_;
    p.jump = true;
    for (std::size_t i = 0; i < d_; ++i) x_[i] = static_cast<double>(cube[i]) + (*y)[i];
    p.x1 = x_;
    traj_.pieces.push_back(std::move(p));
    ++traj_.jumps;
    log(TraceKind::jump, cube, a.ball.id, index);
    refresh_membership();
  }

  void log(TraceKind kind, const LatticeVector& cell, std::optional<std::uint64_t> id = std::nullopt,
           std::optional<std::int64_t> y_index = std::nullopt) {
    if (!opt_.log_events) return;
    traj_.events.push_back({t_, kind, x_, cell, id, y_index});
  }

  const TeleportWorld& world_;
  SimulateOptions opt_;
  std::size_t d_;
  double L_, t0_, r_;
  Vec x_;
  double t_ = 0.0;
  std::map<std::uint64_t, Active> active_;
  std::set<std::int64_t> consumed_;
  std::unordered_map<LatticeVector, CellInfo, LatticeVectorHash> cache_;
  ContinuousTrajectory traj_;
};

enum class Cmp { at_least, at_most, below };

// First time >= from (scanning pieces from index `first`) at which the
// projection satisfies the comparison with `level`. For Cmp::below the
// infimum of {X . l < level} is returned.
std::optional<std::pair<double, std::size_t>> first_time(const ContinuousTrajectory& traj, const Vec& l, double level,
                                                         Cmp cmp, std::size_t first, double from) {
  auto holds = [&](double f) {
    switch (cmp) {
      case Cmp::at_least: return f >= level;
      case Cmp::at_most: return f <= level;
      case Cmp::below: return f < level;
    }
    return false;
  };
  if (traj.pieces.empty()) {
    if (holds(dot(traj.start, l))) return std::pair{0.0, std::size_t{0}};
    return std::nullopt;
  }
  for (std::size_t i = first; i < traj.pieces.size(); ++i) {
    const Piece& p = traj.pieces[i];
    if (p.jump) {
      if (p.t0 >= from && holds(dot(p.x1, l))) return std::pair{p.t0, i};
      continue;
    }
    const double ts = std::max(from, p.t0);
    if (ts > p.t1) continue;
    const double s = dot(p.v, l);
    const double fs = dot(p.x0, l) + (ts - p.t0) * s;
    if (holds(fs)) return std::pair{ts, i};
    const bool towards = cmp == Cmp::at_least ? s > 0.0 : s < 0.0;
    if (!towards) continue;
    const double tc = ts + (level - fs) / s;
    if (cmp == Cmp::below ? tc < p.t1 : tc <= p.t1) return std::pair{std::max(ts, tc), i};
  }
  return std::nullopt;
}

}  // namespace

ContinuousTrajectory simulate(const TeleportWorld& world, double t_max, const SimulateOptions& opt) {
  if (!(t_max > 0.0) || !std::isfinite(t_max)) throw std::invalid_argument("simulate: t_max must be positive");
  return Simulator(world, t_max, opt).run();
}

std::optional<double> hitting_time(const ContinuousTrajectory& traj, const Vec& l, double u) {
  auto r = first_time(traj, l, u, Cmp::at_least, 0, 0.0);
  if (!r) return std::nullopt;
  return r->first;
}

std::optional<double> backtrack_time(const ContinuousTrajectory& traj, const Vec& l) {
  auto g = first_time(traj, l, 0.0, Cmp::at_least, 0, 0.0);
  if (!g) return std::nullopt;
  auto r = first_time(traj, l, 0.0, Cmp::below, g->second, g->first);
  if (!r) return std::nullopt;
  return r->first;
}

CrossingRecord crossing_record(const ContinuousTrajectory& traj, const Vec& l, double w, double bound) {
  if (!(w > 0.5 && w < 1.0)) throw std::invalid_argument("crossing_record: w must lie in (1/2, 1)");
  CrossingRecord rec;
  rec.direction = l;
  rec.width = w;
  rec.bound = bound;
  const double min_gap = w / bound;
  auto gap_ok = [&](double gap) { return gap >= min_gap * (1.0 - 1e-9) - 1e-12; };

  rec.g.push_back(0.0);
  std::size_t gi = 0;
  double gt = 0.0;
  bool start_ok = dot(traj.start, l) >= 0.0;
  std::size_t flow_pairs = 0;
  for (std::size_t i = 0;; ++i) {
    auto f = first_time(traj, l, -w, Cmp::at_most, gi, gt);
    if (!f) {
      rec.f.push_back(kInfinity);
      break;
    }
    rec.f.push_back(f->first);
    bool flow = i > 0 || start_ok;
    for (std::size_t k = gi; k <= f->second && flow; ++k) {
      const Piece& p = traj.pieces[k];
      if (p.jump && p.t0 >= gt && p.t0 <= f->first) flow = false;
    }
    rec.flow_only.push_back(flow);
    const double gap = f->first - gt;
    if (gap < 0.0) throw std::logic_error("crossing_record: F_" + std::to_string(i) + " < G_" + std::to_string(i));
    if (flow) {
      ++rec.checked_pairs;
      if (!gap_ok(gap) || !(gap > 0.0)) {
        throw std::logic_error("crossing_record: F_" + std::to_string(i) + " - G_" + std::to_string(i) + " = " +
                               fmt(gap) + " < w/L = " + fmt(min_gap));
      }
      if (i > 0) ++flow_pairs;
    }
    if (i > 0 && f->first < min_gap * static_cast<double>(flow_pairs) * (1.0 - 1e-9) - 1e-12) {
      throw std::logic_error("crossing_record: F_" + std::to_string(i) + " = " + fmt(f->first) +
                             " below the accumulated bound");
    }
    auto g = first_time(traj, l, 0.0, Cmp::at_least, f->second, f->first);
    if (!g) break;
    if (g->first < f->first) throw std::logic_error("crossing_record: times not interleaved");
    rec.g.push_back(g->first);
    gi = g->second;
    gt = g->first;
  }
  return rec;
}

TeleportWorld trap_scenario(std::size_t dim, std::uint64_t seed, const LatticeVector& centre) {
  TeleportWorld w(default_field_model(dim), default_teleport_config(dim), seed);
  const double L = w.field().bound;
  for (const auto& z : block(centre, 1)) {
    w.set_balls(z, {});
    if (z == centre) continue;
    Vec b(dim);
    double n = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
      b[i] = static_cast<double>(centre[i] - z[i]);
      n += b[i] * b[i];
    }
    for (double& x : b) x *= L / std::sqrt(n);
    w.set_field(z, b);
  }
  CounterRng rng(StreamKey(seed, "trap-start"));
  Vec x(dim);
  for (std::size_t i = 0; i < dim; ++i) x[i] = static_cast<double>(centre[i]) + rng.uniform();
  w.set_initial_position(x);
  return w;
}

TeleportWorld trap_scenario(std::size_t dim, std::uint64_t seed) { return trap_scenario(dim, seed, LatticeVector(dim)); }

bool stays_in_cube(const ContinuousTrajectory& traj, const LatticeVector& cube, double tol) {
  auto inside = [&](const Vec& x) {
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double lo = static_cast<double>(cube[i]);
      if (x[i] < lo - tol || x[i] > lo + 1.0 + tol) return false;
    }
    return true;
  };
  if (!inside(traj.start)) return false;
  for (const auto& p : traj.pieces) {
    if (p.jump) {
      if (!inside(p.x1)) return false;
      continue;
    }
    Vec end = p.x0;
    for (std::size_t i = 0; i < end.size(); ++i) end[i] += (p.t1 - p.t0) * p.v[i];
    if (!inside(p.x0) || !inside(end)) return false;
  }
  return true;
}

Tunnel tunnel_scenario(std::size_t dim, std::uint64_t seed, const Vec& start) {
  if (dim < 2) throw std::invalid_argument("tunnel_scenario: needs d >= 2");
  Tunnel t{TeleportWorld(default_field_model(dim), default_teleport_config(dim), seed), 0, 0.0};
  TeleportWorld& w = t.world;
  const double L = w.field().bound, delta0 = w.field().delta0;
  if (L < 0.5) throw std::invalid_argument("tunnel_scenario: the transit bound needs L >= 1/2");
  t.length = static_cast<std::int64_t>(std::ceil(2.0 * L));
  t.speed_bound = 4.0 * L / delta0;
  const double side = std::sqrt(L * L - delta0 * delta0) / std::sqrt(static_cast<double>(dim - 1));

  // cells with x in [-2, length] and transverse coordinates in [-6, 5]
  LatticeVector lo(dim), hi(dim);
  lo[0] = -2;
  hi[0] = t.length;
  for (std::size_t i = 1; i < dim; ++i) {
    lo[i] = -6;
    hi[i] = 5;
  }
  LatticeVector z = lo;
  for (;;) {
    w.set_balls(z, {});
    bool corridor = true;
    for (std::size_t i = 1; i < dim; ++i) corridor = corridor && z[i] >= -5 && z[i] <= 4;
    if (corridor && z[0] == -1) {
      Vec b(dim, 0.0);
      b[0] = L;
      w.set_field(z, b);
    } else if (corridor && z[0] >= 0 && z[0] < t.length) {
      Vec b(dim);
      b[0] = delta0;
      for (std::size_t i = 1; i < dim; ++i) b[i] = z[i] >= 0 ? -side : side;
      w.set_field(z, b);
    }
    std::size_t i = dim;
    while (i > 0) {
      --i;
      if (z[i] < hi[i]) {
        ++z[i];
        break;
      }
      z[i] = lo[i];
      if (i == 0) {
        w.set_initial_position(start);
        return t;
      }
    }
  }
}

std::string to_string(ContinuousKind kind) {
  switch (kind) {
    case ContinuousKind::tail: return "tail";
    case ContinuousKind::hit: return "hit";
    case ContinuousKind::hit_noback: return "hit_noback";
  }
  return "?";
}

ContinuousKind parse_continuous_kind(const std::string& s) {
  if (s == "tail") return ContinuousKind::tail;
  if (s == "hit") return ContinuousKind::hit;
  if (s == "hit_noback") return ContinuousKind::hit_noback;
  throw std::invalid_argument("unknown event kind '" + s + "' (expected tail, hit or hit_noback)");
}

RateCurve ContinuousCurve::as_rate_curve() const {
  RateCurve c;
  c.n = static_cast<std::size_t>(std::llround(t));
  c.direction = direction;
  c.kind = kind == ContinuousKind::tail ? dwre::EventKind::tail
           : kind == ContinuousKind::hit ? dwre::EventKind::hit
                                         : dwre::EventKind::hit_noback;
  c.points = points;
  return c;
}

std::vector<ContinuousCurve> estimate_continuous(const TeleportWorld& base, const McOptions& opt, const Vec& l,
                                                 const std::vector<double>& ks, const std::vector<double>& ts,
                                                 const std::vector<ContinuousKind>& kinds) {
  if (opt.samples < kMinSamples) throw std::invalid_argument("estimate_continuous: at least 100 samples required");
  if (ks.empty() || ts.empty() || kinds.empty()) throw std::invalid_argument("estimate_continuous: empty grid");
  if (l.size() != base.dim() || std::abs(norm(l) - 1.0) > 1e-9) {
    throw std::invalid_argument("estimate_continuous: l must be a unit vector of the model dimension");
  }
  for (double k : ks)
    if (!(k >= 0.0)) throw std::invalid_argument("estimate_continuous: k must be >= 0");
  for (double t : ts)
    if (!(t > 0.0)) throw std::invalid_argument("estimate_continuous: t must be positive");
  const double t_max = *std::max_element(ts.begin(), ts.end());
  const std::size_t nt = ts.size(), nk = ks.size();

  // per sample: tail, hit, noback bits for every (t, k)
  std::vector<std::uint8_t> bits(opt.samples * nt * nk * 3, 0);
  parallel_for(opt.samples, opt.workers, [&](std::size_t s) {
    const TeleportWorld w = base.with_seed(sample_seed(opt.seed, s));
    const auto traj = simulate(w, t_max, {.log_events = false});
    const auto back = backtrack_time(traj, l);
    const double d1 = back ? *back : kInfinity;
    for (std::size_t a = 0; a < nt; ++a) {
      const double x = dot(traj.position_at(ts[a]), l);
      for (std::size_t b = 0; b < nk; ++b) {
        const double level = ks[b] * ts[a];
        const auto hit = hitting_time(traj, l, level);
        std::uint8_t* out = &bits[((s * nt + a) * nk + b) * 3];
        out[0] = x >= level;
        out[1] = hit && *hit <= ts[a];
        out[2] = out[1] && *hit <= d1;
      }
    }
  });

  std::vector<ContinuousCurve> curves;
  for (std::size_t a = 0; a < nt; ++a) {
    std::vector<std::array<std::size_t, 3>> count(nk, {0, 0, 0});
    std::size_t tail_not_hit = 0, noback_not_hit = 0;
    for (std::size_t s = 0; s < opt.samples; ++s) {
      for (std::size_t b = 0; b < nk; ++b) {
        const std::uint8_t* in = &bits[((s * nt + a) * nk + b) * 3];
        for (int e = 0; e < 3; ++e) count[b][e] += in[e];
        tail_not_hit += in[0] && !in[1];
        noback_not_hit += in[2] && !in[1];
      }
    }
    for (ContinuousKind kind : kinds) {
      ContinuousCurve c;
      c.t = ts[a];
      c.direction = l;
      c.kind = kind;
      c.tail_not_hit = tail_not_hit;
      c.noback_not_hit = noback_not_hit;
      const int e = static_cast<int>(kind);
      for (std::size_t b = 0; b < nk; ++b) {
        auto est = bernoulli_estimate(count[b][e], opt.samples, opt.seed,
                                      to_string(kind) + "(t=" + fmt(ts[a]) + ",k=" + fmt(ks[b]) + ")");
        c.points.push_back(rate_point(ks[b], est, ts[a]));
      }
      curves.push_back(std::move(c));
    }
  }
  return curves;
}

FieldModel field_from_config(const Config& cfg) {
  const std::size_t dim = static_cast<std::size_t>(cfg.get_int("field", "dimension", 2));
  if (dim == 0 || dim > 4) throw ConfigError("[field] dimension must be in 1..4", cfg.get("field", "dimension")->line);
  const double L = cfg.get_double("field", "L", 1.0);
  FieldModel f = default_field_model(dim, L);
  const auto& entries = cfg.all("field", "vector");
  if (!entries.empty()) {
    f.vectors.clear();
    f.probabilities.clear();
    for (const auto& e : entries) {
      auto parts = split(e.value, ':');
      if (parts.size() != 2) throw ConfigError("expected 'vector = v1 ... vd : probability'", e.line);
      Vec v = parse_doubles(parts[0], e.line);
      if (v.size() != dim) throw ConfigError("field vector has " + std::to_string(v.size()) + " coordinates", e.line);
      f.vectors.push_back(v);
      f.probabilities.push_back(parse_double(parts[1], e.line));
    }
    f.c = *std::min_element(f.probabilities.begin(), f.probabilities.end());
    f.delta0 = 0.5 * nice::rho_min_real(f.vectors, kValidationResolution).kappa;
  }
  f.delta0 = cfg.get_double("field", "delta0", f.delta0);
  f.c = cfg.get_double("field", "c", f.c);
  return f;
}

TeleportConfig teleport_from_config(const Config& cfg, const FieldModel& field) {
  TeleportConfig t = default_teleport_config(field.dimension, field.bound);
  t.radius = cfg.get_double("teleport", "r", t.radius);
  if (!cfg.has("teleport", "t0")) t.dwell = 0.8 * t.radius / (4.0 * field.bound);
  t.dwell = cfg.get_double("teleport", "t0", t.dwell);
  t.skip = cfg.get_double("teleport", "c3", t.skip);
  t.intensity = cfg.get_double("teleport", "lambda0", t.intensity);
  const auto& entries = cfg.all("teleport", "jump");
  if (!entries.empty()) {
    t.jumps.clear();
    for (const auto& e : entries) {
      Vec u = parse_doubles(e.value, e.line);
      if (u.size() != field.dimension) throw ConfigError("jump vector has the wrong dimension", e.line);
      t.jumps.push_back(u);
    }
  }
  return t;
}

std::string events_jsonl(const ContinuousTrajectory& traj) {
  std::string out;
  for (const auto& e : traj.events) {
    nlohmann::ordered_json j;
    j["t"] = e.t;
    j["kind"] = to_string(e.kind);
    j["position"] = e.position;
    j["cell"] = std::vector<std::int64_t>(e.cell.coords().begin(), e.cell.coords().end());
    j["teleport_id"] = e.teleport_id ? nlohmann::ordered_json(*e.teleport_id) : nlohmann::ordered_json(nullptr);
    if (e.y_index) j["y_index"] = *e.y_index;
    out += j.dump() + "\n";
  }
  return out;
}

std::string continuous_rate_csv(const std::vector<ContinuousCurve>& curves) {
  std::string out = "t,k,kind,value,se,samples,censored\n";
  for (const auto& c : curves) {
    for (const auto& p : c.points) {
      out += fmt(c.t) + "," + fmt(p.k) + "," + to_string(c.kind) + "," + fmt(p.value) + "," + fmt(p.se) + "," +
             std::to_string(p.probability.samples) + "," + (p.censored ? "1" : "0") + "\n";
    }
  }
  return out;
}

}  // namespace dwre::cont
