#include "dwre/walk.hpp"

#include <stdexcept>
#include <string>
#include <unordered_map>

namespace dwre {

Trajectory run_walk(const FieldHandle& field, std::size_t horizon) {
  if (horizon < 1) throw std::invalid_argument("run_walk: horizon must be at least 1");
  Trajectory t;
  t.horizon = horizon;
  const std::size_t d = field.spec().dimension;
  LatticeVector y(d);
  std::unordered_map<LatticeVector, std::size_t, LatticeVectorHash> first_visit;
  first_visit.reserve(std::min<std::size_t>(horizon + 1, 4096));
  first_visit.emplace(y, 0);
  t.positions.push_back(y);
  for (std::size_t n = 1; n <= horizon; ++n) {
    y += field.sample_eta(y);
    if (!y.in_coordinate_range()) throw RangeError("run_walk: position " + y.to_string() + " outside coordinate range");
    t.positions.push_back(y);
    auto [it, fresh] = first_visit.emplace(y, n);
    if (!fresh) {
      t.tau = n;
      t.theta = it->second;
      break;
    }
  }
  return t;
}

namespace {

std::size_t position_index(const Trajectory& traj, std::size_t n, PathMode mode) {
  if (traj.looped()) {
    const std::size_t tau = *traj.tau, theta = *traj.theta;
    if (n <= tau) return n;
    if (mode == PathMode::stopped) return tau;
    return theta + (n - theta) % (tau - theta);
  }
  if (n > traj.horizon || n >= traj.positions.size())
    throw std::out_of_range("position_at: step " + std::to_string(n) + " beyond the simulated horizon");
  return n;
}

}  // namespace

LatticeVector position_at(const Trajectory& traj, std::size_t n, PathMode mode) {
  return traj.positions[position_index(traj, n, mode)];
}

std::size_t hitting_time(const Trajectory& traj, const Direction& l, double level, PathMode) {
  // Positions after tau repeat Y_theta..Y_{tau-1} (or stay at Y_tau), so the
  // stored list already contains every site the walk ever occupies.
  for (std::size_t n = 0; n < traj.positions.size(); ++n)
    if (reaches_level(traj.positions[n].dot(l.span()), level)) return n;
  return kNever;
}

HittingRecord hitting_times(const Trajectory& traj, const Direction& l, const std::vector<double>& levels,
                            PathMode mode) {
  HittingRecord r;
  r.direction = l.values();
  r.levels = levels;
  for (double m : levels) r.times.push_back(hitting_time(traj, l, m, mode));
  return r;
}

BacktrackRecord backtrack_times(const Trajectory& traj, const Direction& l, std::size_t count, PathMode mode) {
  BacktrackRecord r;
  r.direction = l.values();
  const auto& y = traj.positions;
  auto crossing = [&](std::size_t n) {
    return reaches_level(y[n - 1].dot(l.span()), 0.0) && strictly_negative(y[n].dot(l.span()));
  };
  for (std::size_t n = 1; n < y.size() && r.times.size() < count; ++n)
    if (crossing(n)) r.times.push_back(n);
  if (traj.looped() && mode == PathMode::loop_extended && r.times.size() < count) {
    const std::size_t tau = *traj.tau, theta = *traj.theta, period = tau - theta;
    std::vector<std::size_t> in_loop;  // crossings at n in (theta, tau]
    for (std::size_t n = theta + 1; n <= tau; ++n)
      if (crossing(n)) in_loop.push_back(n);
    for (std::size_t rep = 1; !in_loop.empty() && r.times.size() < count; ++rep)
      for (std::size_t n : in_loop) {
        if (r.times.size() >= count) break;
        r.times.push_back(n + rep * period);
      }
  }
  r.times.resize(count, kNever);
  return r;
}

std::string trajectory_csv(const Trajectory& traj, std::size_t last) {
  const std::size_t d = traj.positions.front().dim();
  std::string out = "n";
  for (std::size_t j = 0; j < d; ++j) out += ",x" + std::to_string(j + 1);
  out += "\n";
  for (std::size_t n = 0; n <= last; ++n) {
    auto p = position_at(traj, n);
    out += std::to_string(n);
    for (std::size_t j = 0; j < d; ++j) out += "," + std::to_string(p[j]);
    out += "\n";
  }
  return out;
}

std::string trajectory_json(const Trajectory& traj) {
  auto opt = [](const std::optional<std::size_t>& v) { return v ? std::to_string(*v) : std::string("null"); };
  return "{\"tau\":" + opt(traj.tau) + ",\"theta\":" + opt(traj.theta) +
         ",\"period\":" + (traj.looped() ? std::to_string(traj.loop_period()) : std::string("null")) +
         ",\"horizon\":" + std::to_string(traj.horizon) + "}";
}

}  // namespace dwre
