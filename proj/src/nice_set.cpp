#include "dwre/nice_set.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <unordered_map>

#include <boost/multiprecision/cpp_int.hpp>

namespace dwre::nice {

namespace {

using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

void check_input(std::span<const LatticeVector> vectors) {
  if (vectors.empty()) throw std::invalid_argument("nice set: empty vector list");
  const std::size_t d = vectors.front().dim();
  for (const auto& v : vectors) {
    if (v.dim() != d) throw std::invalid_argument("nice set: vectors of mixed dimension");
    if (v.is_zero()) throw std::invalid_argument("nice set: zero vector " + v.to_string());
  }
}

std::vector<double> normalized(const std::vector<Rational>& y) {
  std::vector<double> out(y.size());
  double n = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    out[i] = y[i].convert_to<double>();
    n += out[i] * out[i];
  }
  n = std::sqrt(n);
  for (double& x : out) x /= n;
  return out;
}

// A nonzero l with u_i . l = 0 for every i, if the vectors do not span R^d.
std::optional<std::vector<Rational>> orthogonal_complement_vector(std::span<const LatticeVector> vectors) {
  const std::size_t m = vectors.size(), d = vectors.front().dim();
  std::vector<std::vector<Rational>> a(m, std::vector<Rational>(d));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < d; ++j) a[i][j] = vectors[i][j];
  std::vector<std::size_t> pivot_col;
  std::size_t row = 0;
  for (std::size_t col = 0; col < d && row < m; ++col) {
    std::size_t p = row;
    while (p < m && a[p][col] == 0) ++p;
    if (p == m) continue;
    std::swap(a[p], a[row]);
    const Rational inv = 1 / a[row][col];
    for (auto& x : a[row]) x *= inv;
    for (std::size_t r = 0; r < m; ++r) {
      if (r == row || a[r][col] == 0) continue;
      const Rational f = a[r][col];
      for (std::size_t j = 0; j < d; ++j) a[r][j] -= f * a[row][j];
    }
    pivot_col.push_back(col);
    ++row;
  }
  if (pivot_col.size() == d) return std::nullopt;
  std::size_t free_col = 0;
  while (std::find(pivot_col.begin(), pivot_col.end(), free_col) != pivot_col.end()) ++free_col;
  std::vector<Rational> l(d, Rational(0));
  l[free_col] = 1;
  for (std::size_t r = 0; r < pivot_col.size(); ++r) l[pivot_col[r]] = -a[r][free_col];
  return l;
}

// Phase-one simplex (Bland's rule) for: find mu >= 0 with sum_i mu_i u_i = -sum_i u_i.
// Feasible iff a combination with every weight >= 1 sums to zero. On
// infeasibility the optimal duals give y with y . u_i <= 0 and y . sum u_i > 0.
struct LpOutcome {
  bool feasible = false;
  std::vector<Rational> weights;  // lambda_i = 1 + mu_i
  std::vector<Rational> dual;
};

LpOutcome solve_positive_combination(std::span<const LatticeVector> vectors) {
  const std::size_t m = vectors.size(), d = vectors.front().dim();
  const std::size_t cols = m + d;  // mu then artificials; rhs stored separately
  std::vector<std::vector<Rational>> t(d, std::vector<Rational>(cols + 1, Rational(0)));
  std::vector<int> sign(d, 1);
  for (std::size_t r = 0; r < d; ++r) {
    Rational b = 0;
    for (std::size_t i = 0; i < m; ++i) b -= vectors[i][r];
    if (b < 0) sign[r] = -1;
    for (std::size_t i = 0; i < m; ++i) t[r][i] = sign[r] * vectors[i][r];
    t[r][m + r] = 1;
    t[r][cols] = sign[r] * b;
  }
  std::vector<std::size_t> basis(d);
  for (std::size_t r = 0; r < d; ++r) basis[r] = m + r;
  auto cost = [&](std::size_t j) { return j >= m ? Rational(1) : Rational(0); };

  for (;;) {
    std::size_t entering = cols;
    for (std::size_t j = 0; j < cols; ++j) {
      Rational rc = cost(j);
      for (std::size_t r = 0; r < d; ++r) rc -= cost(basis[r]) * t[r][j];
      if (rc < 0) {
        entering = j;
        break;
      }
    }
    if (entering == cols) break;
    std::size_t leave = d;
    Rational best;
    for (std::size_t r = 0; r < d; ++r) {
      if (t[r][entering] <= 0) continue;
      Rational ratio = t[r][cols] / t[r][entering];
      if (leave == d || ratio < best || (ratio == best && basis[r] < basis[leave])) {
        leave = r;
        best = ratio;
      }
    }
    if (leave == d) throw std::logic_error("phase-one LP unbounded");
    const Rational inv = 1 / t[leave][entering];
    for (auto& x : t[leave]) x *= inv;
    for (std::size_t r = 0; r < d; ++r) {
      if (r == leave || t[r][entering] == 0) continue;
      const Rational f = t[r][entering];
      for (std::size_t j = 0; j <= cols; ++j) t[r][j] -= f * t[leave][j];
    }
    basis[leave] = entering;
  }

  Rational objective = 0;
  for (std::size_t r = 0; r < d; ++r) objective += cost(basis[r]) * t[r][cols];
  LpOutcome out;
  if (objective == 0) {
    out.feasible = true;
    out.weights.assign(m, Rational(1));
    for (std::size_t r = 0; r < d; ++r)
      if (basis[r] < m) out.weights[basis[r]] += t[r][cols];
  } else {
    out.dual.assign(d, Rational(0));
    for (std::size_t r = 0; r < d; ++r) {
      Rational y = 0;
      for (std::size_t k = 0; k < d; ++k) y += cost(basis[k]) * t[k][m + r];
      out.dual[r] = sign[r] * y;
    }
  }
  return out;
}

std::vector<std::int64_t> to_integers(const std::vector<Rational>& w) {
  BigInt l = 1;
  for (const auto& x : w) l = boost::multiprecision::lcm(l, boost::multiprecision::denominator(x));
  std::vector<BigInt> ints;
  BigInt g = 0;
  for (const auto& x : w) {
    ints.push_back(boost::multiprecision::numerator(x) * (l / boost::multiprecision::denominator(x)));
    g = boost::multiprecision::gcd(g, ints.back());
  }
  std::vector<std::int64_t> out;
  for (auto& v : ints) {
    v /= g;
    if (v > BigInt(std::numeric_limits<std::int64_t>::max() / 4)) {
      throw std::runtime_error("nice set: certificate coefficients overflow 64-bit integers");
    }
    out.push_back(v.convert_to<std::int64_t>());
  }
  return out;
}

double max_dot(const std::vector<std::vector<double>>& u, std::span<const double> l) {
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& v : u) {
    double s = 0.0;
    for (std::size_t j = 0; j < v.size(); ++j) s += v[j] * l[j];
    best = std::max(best, s);
  }
  return best;
}

double det(std::vector<std::vector<double>> a) {
  const std::size_t n = a.size();
  double result = 1.0;
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(a[r][c]) > std::abs(a[p][c])) p = r;
    if (a[p][c] == 0.0) return 0.0;
    if (p != c) {
      std::swap(a[p], a[c]);
      result = -result;
    }
    result *= a[c][c];
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = a[r][c] / a[c][c];
      for (std::size_t j = c; j < n; ++j) a[r][j] -= f * a[c][j];
    }
  }
  return result;
}

// Vector orthogonal to the d-1 rows of `rows` (d columns) by cofactor expansion.
std::vector<double> generalized_cross(const std::vector<std::vector<double>>& rows, std::size_t d) {
  std::vector<double> n(d, 0.0);
  if (d == 1) {
    n[0] = 1.0;
    return n;
  }
  for (std::size_t j = 0; j < d; ++j) {
    std::vector<std::vector<double>> minor(d - 1, std::vector<double>(d - 1));
    for (std::size_t r = 0; r < d - 1; ++r) {
      std::size_t cc = 0;
      for (std::size_t c = 0; c < d; ++c)
        if (c != j) minor[r][cc++] = rows[r][c];
    }
    n[j] = ((j % 2) ? -1.0 : 1.0) * det(minor);
  }
  return n;
}

// Exact integer analogue for lattice inputs (d <= 4 keeps values small).
std::vector<std::int64_t> generalized_cross_int(const std::vector<std::vector<std::int64_t>>& rows,
                                                std::size_t d) {
  std::vector<std::vector<double>> r(rows.size(), std::vector<double>(d));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < d; ++j) r[i][j] = static_cast<double>(rows[i][j]);
  auto n = generalized_cross(r, d);
  std::vector<std::int64_t> out(d);
  for (std::size_t j = 0; j < d; ++j) out[j] = std::llround(n[j]);
  return out;
}

template <typename F>
void for_each_subset(std::size_t n, std::size_t k, F&& f) {
  if (k > n) return;
  std::vector<std::size_t> idx(k);
  std::iota(idx.begin(), idx.end(), 0);
  for (;;) {
    f(idx);
    std::size_t i = k;
    while (i > 0 && idx[i - 1] == n - k + i - 1) --i;
    if (i == 0) return;
    ++idx[i - 1];
    for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

// Deterministic quasi-uniform points on S^{d-1}.
std::vector<std::vector<double>> sphere_points(std::size_t d, int count) {
  std::vector<std::vector<double>> pts;
  if (d == 1) return {{1.0}, {-1.0}};
  if (d == 2) {
    for (int k = 0; k < count; ++k) {
      const double a = 2.0 * std::numbers::pi * k / count;
      pts.push_back({std::cos(a), std::sin(a)});
    }
    return pts;
  }
  if (d == 3) {
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int k = 0; k < count; ++k) {
      const double z = 1.0 - 2.0 * (k + 0.5) / count;
      const double rad = std::sqrt(1.0 - z * z);
      pts.push_back({rad * std::cos(golden * k), rad * std::sin(golden * k), z});
    }
    return pts;
  }
  // d >= 4: normalized Gaussian-free construction from hashed uniforms.
  std::uint64_t s = 0x243f6a8885a308d3ULL;
  auto next = [&] {
    s += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = s;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return static_cast<double>((z ^ (z >> 31)) >> 11) * 0x1.0p-53;
  };
  while (static_cast<int>(pts.size()) < count) {
    std::vector<double> p(d);
    double n = 0.0;
    for (auto& x : p) {
      x = 2.0 * next() - 1.0;
      n += x * x;
    }
    if (n > 1.0 || n < 1e-6) continue;
    for (auto& x : p) x /= std::sqrt(n);
    pts.push_back(std::move(p));
  }
  return pts;
}

}  // namespace

NicenessCertificate is_nice(std::span<const LatticeVector> vectors) {
  check_input(vectors);
  NicenessCertificate cert;
  LpOutcome lp = solve_positive_combination(vectors);
  if (!lp.feasible) {
    cert.violating_direction = normalized(lp.dual);
    return cert;
  }
  if (auto l = orthogonal_complement_vector(vectors)) {
    cert.violating_direction = normalized(*l);
    return cert;
  }
  cert.nice = true;
  cert.positive_combination = to_integers(lp.weights);
  return cert;
}

bool nice_by_sphere_grid(std::span<const LatticeVector> vectors, int directions) {
  check_input(vectors);
  const std::size_t d = vectors.front().dim();
  std::vector<std::vector<double>> u;
  for (const auto& v : vectors) {
    std::vector<double> row(d);
    for (std::size_t j = 0; j < d; ++j) row[j] = static_cast<double>(v[j]);
    u.push_back(row);
  }
  for (const auto& l : sphere_points(d, directions)) {
    if (max_dot(u, l) <= 0.0) return false;
  }
  if (d == 1) return true;
  // Candidate extreme rays of the cone {l : l . u_i <= 0}: normals of
  // (d-1)-subsets drawn from the vectors and the coordinate axes.
  std::vector<std::vector<std::int64_t>> pool;
  for (const auto& v : vectors) pool.emplace_back(v.coords().begin(), v.coords().end());
  for (std::size_t j = 0; j < d; ++j) {
    std::vector<std::int64_t> e(d, 0);
    e[j] = 1;
    pool.push_back(e);
  }
  bool violated = false;
  for_each_subset(pool.size(), d - 1, [&](const std::vector<std::size_t>& idx) {
    if (violated) return;
    std::vector<std::vector<std::int64_t>> rows;
    for (auto i : idx) rows.push_back(pool[i]);
    auto n = generalized_cross_int(rows, d);
    if (std::all_of(n.begin(), n.end(), [](auto x) { return x == 0; })) return;
    for (int sgn : {1, -1}) {
      std::int64_t best = std::numeric_limits<std::int64_t>::min();
      for (const auto& v : vectors) {
        std::int64_t s = 0;
        for (std::size_t j = 0; j < d; ++j) s += v[j] * n[j] * sgn;
        best = std::max(best, s);
      }
      if (best <= 0) violated = true;
    }
  });
  return !violated;
}

NiceSet::NiceSet(std::vector<LatticeVector> vectors) : vectors_(std::move(vectors)) {
  auto cert = is_nice(vectors_);
  if (!cert.nice) {
    std::string msg = "vectors are not nice; violating direction (";
    for (std::size_t i = 0; i < cert.violating_direction.size(); ++i)
      msg += (i ? "," : "") + std::to_string(cert.violating_direction[i]);
    throw std::invalid_argument(msg + ")");
  }
  certificate_ = std::move(cert.positive_combination);
}

std::int64_t LoopCoefficients::total() const { return std::accumulate(q.begin(), q.end(), std::int64_t{0}); }

namespace {

// Primitive positive integer kernel vector of the columns u_i, i in idx, if
// the kernel is one-dimensional and strictly positive up to sign.
std::optional<std::vector<std::int64_t>> positive_circuit(const std::vector<LatticeVector>& u,
                                                          const std::vector<std::size_t>& idx) {
  const std::size_t d = u.front().dim(), s = idx.size();
  std::vector<std::vector<Rational>> a(d, std::vector<Rational>(s));
  for (std::size_t r = 0; r < d; ++r)
    for (std::size_t c = 0; c < s; ++c) a[r][c] = u[idx[c]][r];
  std::vector<std::size_t> pivots;
  std::size_t row = 0;
  std::optional<std::size_t> free_col;
  for (std::size_t col = 0; col < s; ++col) {
    std::size_t p = row;
    while (p < d && a[p][col] == 0) ++p;
    if (p == d) {
      if (free_col) return std::nullopt;  // kernel of dimension >= 2
      free_col = col;
      continue;
    }
    std::swap(a[p], a[row]);
    const Rational inv = 1 / a[row][col];
    for (auto& x : a[row]) x *= inv;
    for (std::size_t r = 0; r < d; ++r) {
      if (r == row || a[r][col] == 0) continue;
      const Rational f = a[r][col];
      for (std::size_t j = 0; j < s; ++j) a[r][j] -= f * a[row][j];
    }
    pivots.push_back(col);
    ++row;
  }
  if (!free_col) return std::nullopt;
  std::vector<Rational> k(s, Rational(0));
  k[*free_col] = 1;
  for (std::size_t r = 0; r < pivots.size(); ++r) k[pivots[r]] = -a[r][*free_col];
  const int sign = k.front() > 0 ? 1 : -1;
  BigInt den = 1;
  for (auto& x : k) {
    x *= sign;
    if (x <= 0) return std::nullopt;
    den = boost::multiprecision::lcm(den, boost::multiprecision::denominator(x));
  }
  std::vector<BigInt> ints(s);
  BigInt g = 0;
  for (std::size_t i = 0; i < s; ++i) {
    ints[i] = boost::multiprecision::numerator(k[i]) * (den / boost::multiprecision::denominator(k[i]));
    g = boost::multiprecision::gcd(g, ints[i]);
  }
  std::vector<std::int64_t> out(s);
  for (std::size_t i = 0; i < s; ++i) {
    const BigInt v = ints[i] / g;
    if (v > kMaxLoopSteps) return std::nullopt;
    out[i] = v.convert_to<std::int64_t>();
  }
  return out;
}

// Smallest loop supported on an affinely independent subset (at most d + 1
// vectors). One exists for every nice set.
std::optional<LoopCoefficients> best_circuit(const std::vector<LatticeVector>& u) {
  const std::size_t m = u.size(), d = u.front().dim();
  std::optional<LoopCoefficients> best;
  std::vector<std::size_t> idx;
  auto visit = [&](auto&& self, std::size_t from) -> void {
    if (idx.size() >= 2) {
      if (auto k = positive_circuit(u, idx)) {
        LoopCoefficients loop;
        loop.q.assign(m, 0);
        for (std::size_t i = 0; i < idx.size(); ++i) loop.q[idx[i]] = (*k)[i];
        if (!best || loop.total() < best->total()) best = std::move(loop);
      }
    }
    if (idx.size() == d + 1) return;
    for (std::size_t i = from; i < m; ++i) {
      idx.push_back(i);
      self(self, i + 1);
      idx.pop_back();
    }
  };
  visit(visit, 0);
  return best;
}

}  // namespace

LoopCoefficients find_zero_loop(const NiceSet& nice) {
  constexpr std::size_t kStateBudget = 100'000;
  const auto& u = nice.vectors();
  const std::size_t m = u.size();
  const LatticeVector origin(nice.dim());

  auto circuit = best_circuit(u);
  if (!circuit) {
    std::string set;
    for (const auto& v : u) set += v.to_string();
    throw std::runtime_error("no zero loop within " + std::to_string(kMaxLoopSteps) + " steps for set " + set);
  }
  circuit->minimal = false;
  double reach = 0.0;
  for (const auto& v : u) reach = std::max(reach, v.norm());

  // Breadth-first search for anything shorter than the circuit, keeping only
  // points that can still get back to the origin in time.
  struct Node {
    LatticeVector point;
    std::uint32_t parent;
    std::uint32_t step;
  };
  std::vector<std::vector<Node>> levels;
  levels.push_back({Node{origin, 0, 0}});
  std::size_t states = 1;
  const auto limit = circuit->total();

  for (std::int64_t level = 1; level < limit; ++level) {
    const auto& prev = levels.back();
    const double left = reach * static_cast<double>(limit - 1 - level) + 1e-9;
    std::vector<Node> next;
    std::unordered_map<LatticeVector, std::uint32_t, LatticeVectorHash> seen;
    for (std::uint32_t pi = 0; pi < prev.size(); ++pi) {
      for (std::uint32_t i = 0; i < m; ++i) {
        LatticeVector p = prev[pi].point + u[i];
        if (p == origin) {
          LoopCoefficients loop;
          loop.q.assign(m, 0);
          ++loop.q[i];
          std::uint32_t idx = pi;
          for (std::size_t lv = levels.size() - 1; lv > 0; --lv) {
            ++loop.q[levels[lv][idx].step];
            idx = levels[lv][idx].parent;
          }
          return loop;
        }
        if (p.norm() > left) continue;
        if (seen.emplace(p, static_cast<std::uint32_t>(next.size())).second) next.push_back(Node{p, pi, i});
      }
    }
    states += next.size();
    if (states > kStateBudget) return *circuit;
    levels.push_back(std::move(next));
  }
  circuit->minimal = true;
  return *circuit;
}

std::vector<std::string> verify_loop(const NiceSet& nice, const LoopCoefficients& loop) {
  std::vector<std::string> issues;
  if (loop.q.size() != nice.size()) issues.push_back("coefficient count differs from set size");
  LatticeVector sum(nice.dim());
  std::int64_t total = 0;
  for (std::size_t i = 0; i < loop.q.size() && i < nice.size(); ++i) {
    if (loop.q[i] < 0) issues.push_back("negative coefficient at index " + std::to_string(i));
    sum += loop.q[i] * nice.vectors()[i];
    total += loop.q[i];
  }
  if (total <= 0) issues.push_back("all coefficients zero");
  if (!sum.is_zero()) issues.push_back("weighted sum is " + sum.to_string() + ", not zero");
  return issues;
}

std::vector<LatticeVector> expand_loop(const NiceSet& nice, const LoopCoefficients& loop) {
  std::vector<LatticeVector> steps;
  steps.reserve(static_cast<std::size_t>(loop.total()));
  for (std::size_t i = 0; i < loop.q.size(); ++i)
    for (std::int64_t k = 0; k < loop.q[i]; ++k) steps.push_back(nice.vectors()[i]);
  return steps;
}

std::vector<LatticeVector> reduce_loop(std::vector<LatticeVector> steps) {
  if (steps.empty()) return steps;
  for (;;) {
    std::unordered_map<LatticeVector, std::size_t, LatticeVectorHash> first_seen;
    LatticeVector y(steps.front().dim());
    first_seen.emplace(y, 0);
    bool changed = false;
    for (std::size_t q = 1; q < steps.size(); ++q) {
      y += steps[q - 1];
      auto [it, inserted] = first_seen.emplace(y, q);
      if (!inserted) {
        // y_p == y_q: steps p+1..q (0-based p..q-1) form a sub-loop.
        steps.erase(steps.begin() + static_cast<std::ptrdiff_t>(it->second),
                    steps.begin() + static_cast<std::ptrdiff_t>(q));
        changed = true;
        break;
      }
    }
    if (!changed) return steps;
  }
}

HalfspaceLoop halfspace_loop(const NiceSet& nice, const Direction& l) {
  return halfspace_loop(nice, l, find_zero_loop(nice));
}

HalfspaceLoop halfspace_loop(const NiceSet& nice, const Direction& l, const LoopCoefficients& zero_loop) {
  if (l.dim() != nice.dim()) throw DimensionError("halfspace_loop: direction dimension mismatch");
  auto steps = reduce_loop(expand_loop(nice, zero_loop));
  const std::size_t s = steps.size();

  // Partial sums y_j . l for j = 1..s; the rotation starts after the first minimum.
  LatticeVector y(nice.dim());
  std::size_t pi = s;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t j = 1; j <= s; ++j) {
    y += steps[j - 1];
    const double v = y.dot(l.span());
    if (j == 1 || v < best - kLevelTolerance * std::max(1.0, std::abs(best))) {
      best = v;
      pi = j;
    }
  }
  HalfspaceLoop loop;
  loop.direction = l.values();
  loop.rotation = pi;
  loop.steps.reserve(s);
  for (std::size_t k = 0; k < s; ++k) loop.steps.push_back(steps[(pi + k) % s]);
  return loop;
}

std::vector<std::string> verify_halfspace_loop(const HalfspaceLoop& loop) {
  std::vector<std::string> issues;
  if (loop.steps.empty()) return {"empty loop"};
  const std::size_t s = loop.steps.size();
  double lnorm = 0.0;
  for (double x : loop.direction) lnorm += x * x;
  lnorm = std::sqrt(lnorm);
  LatticeVector y(loop.steps.front().dim());
  std::unordered_map<LatticeVector, std::size_t, LatticeVectorHash> seen;
  seen.emplace(y, 0);
  for (std::size_t p = 1; p <= s; ++p) {
    y += loop.steps[p - 1];
    const double dot = y.dot(loop.direction);
    if (dot < -1e-9 * std::max(1.0, lnorm * y.norm()))
      issues.push_back("(i) partial sum " + std::to_string(p) + " has negative projection");
    if (p < s && !seen.emplace(y, p).second)
      issues.push_back("(ii) partial sum " + std::to_string(p) + " repeats an earlier point");
  }
  if (!y.is_zero()) issues.push_back("(iii) steps sum to " + y.to_string());
  return issues;
}

KappaResult rho_min_real(const std::vector<std::vector<double>>& u, int grid_resolution) {
  if (u.empty()) throw std::invalid_argument("rho_min: empty vector list");
  const std::size_t d = u.front().size();
  if (d == 0 || d > 4) throw std::invalid_argument("rho_min: supported dimensions are 1..4");
  KappaResult res;
  for (const auto& v : u) {
    double n = 0.0;
    for (double x : v) n += x * x;
    res.lipschitz = std::max(res.lipschitz, std::sqrt(n));
  }
  auto consider_grid = [&](const std::vector<double>& l) {
    const double f = max_dot(u, l);
    if (res.argmin.empty() || f < res.kappa_grid) {
      res.kappa_grid = f;
      res.argmin = l;
    }
  };

  const double pi = std::numbers::pi;
  if (d == 1) {
    consider_grid({1.0});
    consider_grid({-1.0});
    res.mesh = 0.0;
  } else if (d == 2) {
    const int n = grid_resolution;
    for (int k = 0; k < n; ++k) {
      const double a = 2.0 * pi * k / n;
      consider_grid({std::cos(a), std::sin(a)});
    }
    res.mesh = pi / n;
  } else if (d == 3) {
    const int n = grid_resolution;
    for (int i = 0; i < n; ++i) {
      const double th = pi * (i + 0.5) / n;
      const double st = std::sin(th), ct = std::cos(th);
      for (int j = 0; j < n; ++j) {
        const double ph = 2.0 * pi * j / n;
        consider_grid({st * std::cos(ph), st * std::sin(ph), ct});
      }
    }
    res.mesh = pi * std::sqrt(1.25) / n;
  } else {
    const int n = std::min(grid_resolution, 64);
    for (int i = 0; i < n; ++i) {
      const double a1 = pi * (i + 0.5) / n;
      for (int j = 0; j < n; ++j) {
        const double a2 = pi * (j + 0.5) / n;
        for (int k = 0; k < n; ++k) {
          const double a3 = 2.0 * pi * k / n;
          const double s1 = std::sin(a1), s2 = std::sin(a2);
          consider_grid({std::cos(a1), s1 * std::cos(a2), s1 * s2 * std::cos(a3), s1 * s2 * std::sin(a3)});
        }
      }
    }
    res.mesh = pi * std::sqrt(0.25 + 0.25 + 1.0) / n;
    res.estimate_only = true;
  }
  res.kappa = res.kappa_grid;
  std::vector<double> best_dir = res.argmin;

  // Local refinement: the infimum of the upper envelope sits where d of the
  // functions u_i . l tie, i.e. l orthogonal to d-1 differences.
  if (d >= 2) {
    for_each_subset(u.size(), d, [&](const std::vector<std::size_t>& idx) {
      std::vector<std::vector<double>> rows;
      for (std::size_t k = 1; k < d; ++k) {
        std::vector<double> diff(d);
        for (std::size_t j = 0; j < d; ++j) diff[j] = u[idx[k]][j] - u[idx[0]][j];
        rows.push_back(diff);
      }
      auto n = generalized_cross(rows, d);
      double norm = 0.0;
      for (double x : n) norm += x * x;
      norm = std::sqrt(norm);
      if (!(norm > 1e-12)) return;
      for (double sgn : {1.0, -1.0}) {
        std::vector<double> l(d);
        for (std::size_t j = 0; j < d; ++j) l[j] = sgn * n[j] / norm;
        const double f = max_dot(u, l);
        if (f < res.kappa) {
          res.kappa = f;
          best_dir = l;
        }
      }
    });
  }
  res.argmin = best_dir;
  res.kappa_lower = res.kappa_grid - res.lipschitz * res.mesh;
  if (d == 1) res.kappa_lower = res.kappa;
  return res;
}

KappaResult rho_min(const NiceSet& nice, int grid_resolution) {
  if (grid_resolution < 1000) throw std::invalid_argument("rho_min: grid resolution must be at least 1000");
  std::vector<std::vector<double>> u;
  for (const auto& v : nice.vectors()) {
    std::vector<double> row(v.dim());
    for (std::size_t j = 0; j < v.dim(); ++j) row[j] = static_cast<double>(v[j]);
    u.push_back(row);
  }
  KappaResult res = rho_min_real(u, grid_resolution);
  if (!res.estimate_only && !(res.kappa_lower > 0.0)) {
    throw std::runtime_error("rho_min: certified lower bound " + std::to_string(res.kappa_lower) +
                             " is not positive; niceness certificate inconsistent or grid too coarse");
  }
  return res;
}

}  // namespace dwre::nice
