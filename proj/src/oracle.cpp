#include "dwre/oracle.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>
#include <unordered_map>

namespace dwre::oracle {

namespace {

constexpr double kUnitRoundoff = 0x1.0p-53;

// Neumaier's variant of Kahan summation.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
    abs_ += std::abs(x);
  }
  double value() const { return sum_ + comp_; }
  double abs_total() const { return abs_; }

 private:
  double sum_ = 0.0, comp_ = 0.0, abs_ = 0.0;
};

using Leaf = std::function<void(const std::vector<LatticeVector>& path, double weight)>;

void check_preconditions(const EnvironmentSpec& spec, std::size_t n) {
  if (!spec.iid() || spec.dependence_range >= 1.0)
    throw std::invalid_argument("oracle: exact enumeration needs an iid spec (M = 0)");
  if (spec.support.empty() || spec.support.size() != spec.probabilities.size())
    throw std::invalid_argument("oracle: malformed support");
  const double size = std::pow(static_cast<double>(spec.support.size()), static_cast<double>(n + 1));
  if (size > kEnumerationGuard)
    throw std::invalid_argument("oracle: " + std::to_string(spec.support.size()) + "^" + std::to_string(n + 1) +
                                " branches exceed the enumeration guard; use a smaller n");
}

// Calls leaf(x_0..x_n, weight) once per environment configuration on the
// visited sites. Once the walk revisits a site the rest of the path is the
// loop repeated, so no further branching happens.
std::uint64_t enumerate(const EnvironmentSpec& spec, std::size_t n, const Leaf& leaf) {
  check_preconditions(spec, n);
  std::vector<LatticeVector> path{LatticeVector(spec.dimension)};
  std::unordered_map<LatticeVector, std::size_t, LatticeVectorHash> visited{{path.front(), 0}};
  std::uint64_t branches = 0;

  std::function<void(double)> dfs = [&](double weight) {
    const std::size_t step = path.size() - 1;
    if (step == n) {
      ++branches;
      leaf(path, weight);
      return;
    }
    for (std::size_t s = 0; s < spec.support.size(); ++s) {
      const double w = weight * spec.probabilities[s];
      const LatticeVector next = path.back() + spec.support[s];
      auto it = visited.find(next);
      if (it != visited.end()) {
        const std::size_t theta = it->second, tau = step + 1, period = tau - theta;
        const std::size_t base = path.size();
        for (std::size_t t = tau; t <= n; ++t) path.push_back(path[theta + (t - theta) % period]);
        ++branches;
        leaf(path, w);
        path.resize(base);
        continue;
      }
      path.push_back(next);
      visited.emplace(next, step + 1);
      dfs(w);
      visited.erase(next);
      path.pop_back();
    }
  };
  dfs(1.0);
  return branches;
}

double dot(const LatticeVector& x, std::span<const double> l) {
  double s = 0.0;
  for (std::size_t j = 0; j < x.dim(); ++j) s += static_cast<double>(x[j]) * l[j];
  return s;
}

// First t <= n with x_t . l >= level, or n + 1.
std::size_t first_hit(const std::vector<LatticeVector>& x, std::span<const double> l, double level) {
  for (std::size_t t = 0; t < x.size(); ++t)
    if (reaches_level(dot(x[t], l), level)) return t;
  return x.size();
}

// First strict downcrossing within the path, or n + 1.
std::size_t first_downcrossing(const std::vector<LatticeVector>& x, std::span<const double> l) {
  for (std::size_t t = 1; t < x.size(); ++t)
    if (reaches_level(dot(x[t - 1], l), 0.0) && strictly_negative(dot(x[t], l))) return t;
  return x.size();
}

Result probability(const EnvironmentSpec& spec, std::size_t n,
                   const std::function<bool(const std::vector<LatticeVector>&)>& pred) {
  CompensatedSum sum;
  Result r;
  r.branches = enumerate(spec, n, [&](const std::vector<LatticeVector>& x, double w) {
    if (pred(x)) sum.add(w);
  });
  r.value = sum.value();
  r.abs_error_bound = static_cast<double>(n + 4) * kUnitRoundoff * sum.abs_total();
  return r;
}

}  // namespace

Result exact_event(const EnvironmentSpec& spec, std::size_t n, const Event& event) {
  if (event.l.dim() != spec.dimension) throw std::invalid_argument("exact_event: direction dimension mismatch");
  const double level = event.level(n);
  const auto l = event.l.span();
  switch (event.kind) {
    case EventKind::tail:
    case EventKind::nonneg:
      return probability(spec, n, [&](const auto& x) { return reaches_level(dot(x[n], l), level); });
    case EventKind::hit:
      return probability(spec, n, [&](const auto& x) { return first_hit(x, l, level) <= n; });
    case EventKind::hit_noback:
      return probability(spec, n, [&](const auto& x) {
        const std::size_t t = first_hit(x, l, level);
        return t <= n && t <= first_downcrossing(x, l);
      });
  }
  throw std::logic_error("exact_event: unknown event kind");
}

Result exact_hitting(const EnvironmentSpec& spec, std::size_t n, const Direction& l, double level,
                     bool with_noback) {
  if (l.dim() != spec.dimension) throw std::invalid_argument("exact_hitting: direction dimension mismatch");
  const auto ls = l.span();
  return probability(spec, n, [&](const auto& x) {
    const std::size_t t = first_hit(x, ls, level);
    return t <= n && (!with_noback || t <= first_downcrossing(x, ls));
  });
}

Result exact_mgf(const EnvironmentSpec& spec, std::size_t n, const std::vector<double>& lambda) {
  if (lambda.size() != spec.dimension) throw std::invalid_argument("exact_mgf: lambda dimension mismatch");
  CompensatedSum sum;
  Result r;
  r.branches = enumerate(spec, n, [&](const std::vector<LatticeVector>& x, double w) {
    sum.add(w * std::exp(dot(x[n], lambda)));
  });
  const double rel = static_cast<double>(n + 6) * kUnitRoundoff * sum.abs_total() / sum.value();
  r.value = std::log(sum.value());
  r.abs_error_bound = rel + kUnitRoundoff * std::abs(r.value);
  return r;
}

std::map<std::vector<std::int64_t>, double> exact_law(const EnvironmentSpec& spec, std::size_t n) {
  std::map<std::vector<std::int64_t>, CompensatedSum> acc;
  enumerate(spec, n, [&](const std::vector<LatticeVector>& x, double w) {
    acc[std::vector<std::int64_t>(x[n].coords().begin(), x[n].coords().end())].add(w);
  });
  std::map<std::vector<std::int64_t>, double> out;
  for (const auto& [k, v] : acc) out[k] = v.value();
  return out;
}

Result total_weight(const EnvironmentSpec& spec, std::size_t n) {
  return probability(spec, n, [](const auto&) { return true; });
}

}  // namespace dwre::oracle
