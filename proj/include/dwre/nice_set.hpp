#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dwre/lattice.hpp"

namespace dwre::nice {

/// Outcome of the exact niceness test.
///
/// When `nice` is true, `positive_combination` holds strictly positive
/// integers w_i with sum_i w_i u_i = 0 and the u_i span R^d (the origin is
/// interior to their convex hull). Otherwise `violating_direction` is a
/// nonzero l with l . u_i <= 0 for all i, normalized to unit length.
struct NicenessCertificate {
  bool nice = false;
  std::vector<std::int64_t> positive_combination;
  std::vector<double> violating_direction;
};

/// Exact test by rational linear programming. Throws std::invalid_argument
/// on an empty list, mixed dimensions or a zero vector.
NicenessCertificate is_nice(std::span<const LatticeVector> vectors);

/// Independent cross-check: evaluates max_i u_i . l over a deterministic
/// sphere grid of `directions` points, augmented with the normals of every
/// (d-1)-subset of the vectors and coordinate axes so that lower-dimensional
/// violating cones are not missed.
bool nice_by_sphere_grid(std::span<const LatticeVector> vectors, int directions = 10000);

/// A set of lattice vectors that passed is_nice; keeps its certificate.
class NiceSet {
 public:
  /// Throws std::invalid_argument if the vectors are not nice.
  explicit NiceSet(std::vector<LatticeVector> vectors);

  const std::vector<LatticeVector>& vectors() const { return vectors_; }
  std::size_t size() const { return vectors_.size(); }
  std::size_t dim() const { return vectors_.front().dim(); }
  const std::vector<std::int64_t>& certificate() const { return certificate_; }

 private:
  std::vector<LatticeVector> vectors_;
  std::vector<std::int64_t> certificate_;
};

/// Nonnegative integer weights, not all zero, with sum_i q_i u_i = 0.
struct LoopCoefficients {
  std::vector<std::int64_t> q;
  std::int64_t total() const;
  /// True when the total is known to be minimal; false when the search
  /// budget ran out before ruling out shorter loops.
  bool minimal = true;
};

inline constexpr std::int64_t kMaxLoopSteps = 1'000'000;

/// Starts from the shortest loop supported on at most d + 1 vectors (exact
/// kernel of each subset), then searches partial sums breadth-first for a
/// shorter one. Throws std::runtime_error if no loop fits in kMaxLoopSteps.
LoopCoefficients find_zero_loop(const NiceSet& nice);

std::vector<std::string> verify_loop(const NiceSet& nice, const LoopCoefficients& loop);

/// Closed walk of nice-set steps that never leaves the half-space {x . l >= 0}.
struct HalfspaceLoop {
  std::vector<LatticeVector> steps;
  std::vector<double> direction;
  std::size_t rotation = 0;  // index pi of the minimal partial sum (1-based)

  std::size_t length() const { return steps.size(); }
};

HalfspaceLoop halfspace_loop(const NiceSet& nice, const Direction& l);
/// Same, reusing a zero loop of `nice` (for many directions on one set).
HalfspaceLoop halfspace_loop(const NiceSet& nice, const Direction& l, const LoopCoefficients& zero_loop);

/// Checks items (i) nonnegative partial sums, (ii) distinct partial-sum
/// points, (iii) zero total. Returns one message per violation.
std::vector<std::string> verify_halfspace_loop(const HalfspaceLoop& loop);

/// Shortest-loop reduction used by halfspace_loop: repeatedly removes the
/// earliest segment between two equal partial-sum points.
std::vector<LatticeVector> reduce_loop(std::vector<LatticeVector> steps);

/// Steps of the loop in coefficient order: u_1 repeated q_1 times, then u_2...
std::vector<LatticeVector> expand_loop(const NiceSet& nice, const LoopCoefficients& loop);

struct KappaResult {
  double kappa = 0.0;        // refined infimum of max_i u_i . l over |l| = 1
  double kappa_grid = 0.0;   // minimum over the grid alone
  double kappa_lower = 0.0;  // kappa_grid - Lip * mesh, a certified lower bound
  double mesh = 0.0;         // covering radius of the grid on the sphere
  double lipschitz = 0.0;    // max_i |u_i|
  std::vector<double> argmin;
  bool estimate_only = false;  // d = 4 uses a coarse grid
};

inline constexpr int kDefaultKappaResolution = 4096;

/// Uniform ellipticity constant of a nice set. Requires resolution >= 1000.
/// Throws std::runtime_error if the certified lower bound is not positive
/// (for d <= 3).
KappaResult rho_min(const NiceSet& nice, int grid_resolution = kDefaultKappaResolution);

/// Same computation for real vectors (d <= 4); no positivity requirement.
KappaResult rho_min_real(const std::vector<std::vector<double>>& vectors,
                         int grid_resolution = kDefaultKappaResolution);

}  // namespace dwre::nice
