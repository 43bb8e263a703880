#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "dwre/config.hpp"
#include "dwre/lattice.hpp"

namespace dwre {

/// Law of the step field eta. With kernel_radius == 0 the field is iid;
/// otherwise it is the block factor described at build_block_factor.
struct EnvironmentSpec {
  std::size_t dimension = 1;
  std::vector<LatticeVector> support;
  std::vector<double> probabilities;
  double dependence_range = 0.0;  // M
  std::vector<std::size_t> nice_subset;
  double c = 0.0;
  std::string seed_domain = "eta";
  int kernel_radius = 0;  // K
  double mixing = 0.0;    // epsilon
  double declared_bound = 0.0;  // optional L from the config; 0 = none

  /// max |u| over the support (L).
  double bound() const;
  bool iid() const { return kernel_radius == 0; }
  std::vector<LatticeVector> nice_vectors() const;
};

struct SpecViolation {
  std::string condition;  // "(i)", "(ii)" or "(iii)"
  std::string message;
};

/// Empty iff the spec is usable. Never throws.
std::vector<SpecViolation> validate_spec(const EnvironmentSpec& spec);
std::string format_violations(const std::vector<SpecViolation>& report);

/// Dependent field from an iid spec. Each site carries four latent
/// uniforms (A_z, O_z, P_z, S_z). If A_z < 1 - epsilon the value is the
/// inverse CDF of O_z; otherwise it is the inverse CDF of S_w for the site w
/// with the largest P_w among |w - z| <= K. Marginals equal the iid law,
/// values at distance > 2K are independent, and each nice vector has
/// conditional probability at least (1 - epsilon) p_i given everything else.
EnvironmentSpec build_block_factor(const EnvironmentSpec& iid_spec, int kernel_radius, double mixing);

/// Lattice sites w with |w| <= radius (Euclidean), in lexicographic order.
std::vector<LatticeVector> ball_offsets(std::size_t dim, int radius);

/// Pure sampler of eta_z for a fixed (spec, master seed). Copies share the
/// immutable spec data; with_seed is cheap.
class FieldHandle {
 public:
  FieldHandle(EnvironmentSpec spec, std::uint64_t master_seed);

  const EnvironmentSpec& spec() const { return data_->spec; }
  std::uint64_t master_seed() const { return seed_; }
  FieldHandle with_seed(std::uint64_t master_seed) const;

  /// Index into spec().support of eta_z.
  std::size_t sample_index(const LatticeVector& z) const;
  LatticeVector sample_eta(const LatticeVector& z) const { return data_->spec.support[sample_index(z)]; }

  /// Pins eta at a site; used to build hand-traced fixtures.
  void set_override(const LatticeVector& z, std::size_t support_index);

 private:
  struct Data {
    EnvironmentSpec spec;
    std::vector<double> cumulative;
    std::vector<LatticeVector> kernel;
  };

  std::size_t inverse_cdf(double u) const;
  double latent(std::uint64_t label, const LatticeVector& z) const;

  std::shared_ptr<const Data> data_;
  std::uint64_t seed_;
  std::unordered_map<LatticeVector, std::size_t, LatticeVectorHash> overrides_;
};

/// Reads an [environment] section:
///   dimension = d
///   step = dx dy ... : prob      (repeated)
///   nice = i, j, ...             (indices into the step list)
///   c = ..., M = ..., K = ..., epsilon = ..., L = ...
/// K > 0 builds the block factor of the listed iid law.
EnvironmentSpec spec_from_config(const Config& cfg, const std::string& section = "environment");

/// Inverse of spec_from_config (block factors are written with K and epsilon).
std::string spec_to_config(const EnvironmentSpec& spec);

}  // namespace dwre
