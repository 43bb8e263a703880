#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

#include "dwre/environment.hpp"
#include "dwre/lattice.hpp"

namespace dwre {

inline constexpr std::size_t kNever = std::numeric_limits<std::size_t>::max();

/// Realized walk: Y_0 = 0, Y_{n+1} = Y_n + eta_{Y_n}, stopped at the first
/// revisit of any earlier site (tau) or at the horizon. theta is the step at
/// which the revisited site was first occupied.
struct Trajectory {
  std::vector<LatticeVector> positions;
  std::optional<std::size_t> tau;
  std::optional<std::size_t> theta;
  std::size_t horizon = 0;

  bool looped() const { return tau.has_value(); }
  std::size_t loop_period() const { return looped() ? *tau - *theta : 0; }
};

enum class PathMode {
  loop_extended,  // X_n: the loop repeats forever
  stopped,        // X_{n ^ tau}: frozen at the closing site
};

Trajectory run_walk(const FieldHandle& field, std::size_t horizon);

/// Throws std::out_of_range when n > horizon on a trajectory without loop.
LatticeVector position_at(const Trajectory& traj, std::size_t n, PathMode mode = PathMode::loop_extended);

/// min n with position_at(n) . l >= level, or kNever. Without a loop only
/// steps up to the horizon are searched.
std::size_t hitting_time(const Trajectory& traj, const Direction& l, double level,
                         PathMode mode = PathMode::loop_extended);

struct HittingRecord {
  std::vector<double> direction;
  std::vector<double> levels;
  std::vector<std::size_t> times;
};

HittingRecord hitting_times(const Trajectory& traj, const Direction& l, const std::vector<double>& levels,
                            PathMode mode = PathMode::loop_extended);

/// D_i: the i-th n with position_at(n-1) . l >= 0 and position_at(n) . l < 0.
struct BacktrackRecord {
  std::vector<double> direction;
  std::vector<std::size_t> times;  // padded with kNever
};

BacktrackRecord backtrack_times(const Trajectory& traj, const Direction& l, std::size_t count,
                                PathMode mode = PathMode::loop_extended);

/// Trajectory dump: "n,x1,...,xd" rows for n = 0..last.
std::string trajectory_csv(const Trajectory& traj, std::size_t last);
/// {"tau":..,"theta":..,"period":..,"horizon":..} with null when unlooped.
std::string trajectory_json(const Trajectory& traj);

}  // namespace dwre
