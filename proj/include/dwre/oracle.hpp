#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "dwre/environment.hpp"
#include "dwre/event.hpp"

namespace dwre::oracle {

/// Exact value up to binary64 summation, with a bound on the rounding error.
struct Result {
  double value = 0.0;
  double abs_error_bound = 0.0;
  std::uint64_t branches = 0;
};

inline constexpr double kEnumerationGuard = 1e7;

/// Depth-first enumeration of the environment at the sites the walk visits
/// during n steps. Requires an iid spec and |support|^(n+1) <= 1e7;
/// throws std::invalid_argument otherwise.
Result exact_event(const EnvironmentSpec& spec, std::size_t n, const Event& event);

/// log E[exp(lambda . X_n)].
Result exact_mgf(const EnvironmentSpec& spec, std::size_t n, const std::vector<double>& lambda);

/// P(T_level <= n), or P(T_level <= n, T_level <= D_1) with `with_noback`.
Result exact_hitting(const EnvironmentSpec& spec, std::size_t n, const Direction& l, double level,
                     bool with_noback);

/// Law of X_n as a map from coordinates to probability.
std::map<std::vector<std::int64_t>, double> exact_law(const EnvironmentSpec& spec, std::size_t n);

/// Sum of all branch weights (1 up to rounding).
Result total_weight(const EnvironmentSpec& spec, std::size_t n);

}  // namespace dwre::oracle
