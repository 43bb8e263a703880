#include "dwre/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include "dwre/parallel.hpp"
#include "dwre/rng.hpp"

namespace dwre {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_samples(const McOptions& opt) {
  if (opt.samples < kMinSamples)
    throw std::invalid_argument("at least " + std::to_string(kMinSamples) + " samples are required");
}

void check_direction(const EnvironmentSpec& spec, const Direction& l) {
  if (l.dim() != spec.dimension) throw DimensionError("direction dimension does not match the environment");
}

std::uint64_t derived_seed(std::uint64_t seed, std::string_view label, std::uint64_t index = 0) {
  return StreamKey(seed, label).add(index).value();
}

struct EventFlags {
  bool tail, hit, noback;
};

EventFlags evaluate(const Trajectory& traj, std::size_t n, const Direction& l, double level,
                    std::size_t first_downcrossing) {
  EventFlags f{};
  f.tail = reaches_level(position_at(traj, n).dot(l.span()), level);
  const std::size_t t = hitting_time(traj, l, level);
  f.hit = t <= n;
  f.noback = f.hit && t <= first_downcrossing;
  return f;
}

bool flag_for(const EventFlags& f, EventKind kind) {
  switch (kind) {
    case EventKind::tail:
    case EventKind::nonneg: return f.tail;
    case EventKind::hit: return f.hit;
    case EventKind::hit_noback: return f.noback;
  }
  return false;
}

double pooled(std::initializer_list<double> ses) {
  double s = 0.0;
  for (double x : ses) s += x * x;
  return std::sqrt(s);
}

}  // namespace

Estimate bernoulli_estimate(std::size_t successes, std::size_t samples, std::uint64_t seed, std::string definition) {
  Estimate e;
  e.samples = samples;
  e.seed = seed;
  e.definition = std::move(definition);
  const double p = static_cast<double>(successes) / static_cast<double>(samples);
  e.value = p;
  e.std_error = std::sqrt(p * (1.0 - p) / static_cast<double>(samples));
  e.censored = successes == 0;
  e.upper = e.censored ? std::min(1.0, 3.0 / static_cast<double>(samples)) : p;
  return e;
}

EventCounts count_events(const EnvironmentSpec& spec, const McOptions& opt, std::size_t n,
                         const std::vector<Event>& events) {
  check_samples(opt);
  for (const auto& e : events) check_direction(spec, e.l);
  const FieldHandle base(spec, opt.seed);
  const std::size_t ne = events.size();
  // Three flag bits per event per sample: tail, hit, noback.
  std::vector<std::uint8_t> bits(opt.samples * ne);
  parallel_for(opt.samples, opt.workers, [&](std::size_t i) {
    const FieldHandle field = base.with_seed(sample_seed(opt.seed, i));
    const Trajectory traj = run_walk(field, n);
    for (std::size_t e = 0; e < ne; ++e) {
      const auto& ev = events[e];
      const std::size_t d1 = backtrack_times(traj, ev.l, 1).times[0];
      auto f = evaluate(traj, n, ev.l, ev.level(n), d1);
      std::uint8_t b = 0;
      if (flag_for(f, ev.kind)) b |= 1;
      if (f.tail && !f.hit && ev.kind != EventKind::nonneg) b |= 2;
      if (f.noback && !f.hit) b |= 4;
      bits[i * ne + e] = b;
    }
  });
  EventCounts out;
  out.samples = opt.samples;
  out.successes.assign(ne, 0);
  for (std::size_t i = 0; i < opt.samples; ++i)
    for (std::size_t e = 0; e < ne; ++e) {
      const auto b = bits[i * ne + e];
      out.successes[e] += b & 1;
      out.tail_not_hit += (b >> 1) & 1;
      out.noback_not_hit += (b >> 2) & 1;
    }
  return out;
}

Estimate estimate_event(const EnvironmentSpec& spec, const McOptions& opt, std::size_t n, const Event& event) {
  auto counts = count_events(spec, opt, n, {event});
  return bernoulli_estimate(counts.successes[0], counts.samples, opt.seed,
                            to_string(event.kind) + "(n=" + std::to_string(n) + ",k=" + format_number(event.k) + ")");
}

RatePoint rate_point(double k, const Estimate& p, double scale) {
  RatePoint r;
  r.k = k;
  r.probability = p;
  r.censored = p.censored;
  if (p.censored) {
    r.value = std::log(p.upper) / scale;
    r.se = 0.0;
  } else {
    r.value = std::log(p.value) / scale;
    r.se = p.std_error / (p.value * scale);
  }
  return r;
}

std::vector<RateCurve> rate_curves(const EnvironmentSpec& spec, const McOptions& opt, std::size_t n,
                                   const Direction& l, const std::vector<double>& ks,
                                   const std::vector<EventKind>& kinds) {
  if (ks.empty()) throw std::invalid_argument("rate curve: empty k grid");
  for (std::size_t i = 0; i < ks.size(); ++i) {
    if (ks[i] < 0.0) throw std::invalid_argument("rate curve: k must be nonnegative");
    if (i && !(ks[i] > ks[i - 1])) throw std::invalid_argument("rate curve: k grid must be strictly increasing");
  }
  std::vector<Event> events;
  for (auto kind : kinds)
    for (double k : ks) events.push_back(Event{kind, l, k});
  auto counts = count_events(spec, opt, n, events);
  std::vector<RateCurve> curves;
  for (std::size_t c = 0; c < kinds.size(); ++c) {
    RateCurve curve;
    curve.n = n;
    curve.direction = l.values();
    curve.kind = kinds[c];
    for (std::size_t j = 0; j < ks.size(); ++j) {
      const auto& ev = events[c * ks.size() + j];
      auto est = bernoulli_estimate(counts.successes[c * ks.size() + j], counts.samples, opt.seed,
                                    to_string(ev.kind) + "(n=" + std::to_string(n) + ",k=" + format_number(ev.k) + ")");
      curve.points.push_back(rate_point(ks[j], est, static_cast<double>(n)));
    }
    curves.push_back(std::move(curve));
  }
  return curves;
}

RateCurve rate_curve(const EnvironmentSpec& spec, const McOptions& opt, std::size_t n, const Direction& l,
                     const std::vector<double>& ks, EventKind kind) {
  return rate_curves(spec, opt, n, l, ks, {kind}).front();
}

std::vector<ShapeCheck> concavity_checks(const RateCurve& curve, double sigmas) {
  std::vector<ShapeCheck> out;
  const auto& p = curve.points;
  for (std::size_t i = 1; i + 1 < p.size(); ++i) {
    if (p[i - 1].censored || p[i].censored || p[i + 1].censored) continue;
    const double a = (p[i + 1].k - p[i].k) / (p[i + 1].k - p[i - 1].k);
    const double b = 1.0 - a;
    ShapeCheck c;
    c.index = i;
    c.lhs = p[i].value;
    c.rhs = a * p[i - 1].value + b * p[i + 1].value;
    c.slack = sigmas * pooled({p[i].se, a * p[i - 1].se, b * p[i + 1].se});
    c.pass = c.lhs >= c.rhs - c.slack;
    out.push_back(c);
  }
  return out;
}

std::vector<ShapeCheck> monotonicity_checks(const RateCurve& curve, double sigmas) {
  std::vector<ShapeCheck> out;
  const auto& p = curve.points;
  for (std::size_t i = 1; i < p.size(); ++i) {
    if (p[i - 1].censored || p[i].censored) continue;
    ShapeCheck c;
    c.index = i;
    c.lhs = p[i].value;
    c.rhs = p[i - 1].value;
    c.slack = sigmas * pooled({p[i].se, p[i - 1].se});
    c.pass = c.lhs <= c.rhs + c.slack;
    out.push_back(c);
  }
  return out;
}

LemmaReport lemma_diagnostics(const EnvironmentSpec& spec, const McOptions& opt, const std::vector<std::size_t>& ns,
                              const Direction& l, double k, double kprime) {
  if (ns.size() < 3) throw std::invalid_argument("lemma diagnostics: need at least three values of n");
  LemmaReport rep;
  rep.k = k;
  rep.kprime = kprime;
  for (std::size_t n : ns) {
    std::vector<Event> ev = {{EventKind::tail, l, k}, {EventKind::hit, l, k}, {EventKind::hit_noback, l, k},
                             {EventKind::hit_noback, l, kprime}};
    auto counts = count_events(spec, opt, n, ev);
    DiagnosticRow row;
    row.n = n;
    const double scale = static_cast<double>(n);
    RatePoint* slots[] = {&row.tail, &row.hit, &row.noback, &row.noback_kprime};
    for (std::size_t e = 0; e < ev.size(); ++e)
      *slots[e] = rate_point(ev[e].k, bernoulli_estimate(counts.successes[e], counts.samples, opt.seed,
                                                         to_string(ev[e].kind)),
                             scale);
    // Inclusions hold pathwise, so raw counts are ordered exactly.
    row.tail_le_hit = row.tail.censored || row.tail.value <= row.hit.value + 3.0 * pooled({row.tail.se, row.hit.se});
    row.noback_le_hit =
        row.noback.censored || row.noback.value <= row.hit.value + 3.0 * pooled({row.noback.se, row.hit.se});
    row.tail_not_hit = counts.tail_not_hit;
    row.noback_not_hit = counts.noback_not_hit;
    row.gap = row.hit.value - row.noback_kprime.value;
    rep.rows.push_back(row);
  }
  rep.gap_shrinks = std::abs(rep.rows.back().gap) < std::abs(rep.rows.front().gap);
  return rep;
}

std::size_t clearance_steps(const EnvironmentSpec& spec, const LatticeVector& w, const Direction& l) {
  const double wl = w.dot(l.span());
  if (!(wl > 0.0)) throw std::invalid_argument("clearance_steps: w . l must be positive");
  return static_cast<std::size_t>(std::ceil(spec.dependence_range / wl - 1e-12)) + 1;
}

SuperadditivityCheck superadditivity_check(const EnvironmentSpec& spec, const McOptions& opt, std::size_t m,
                                           std::size_t n, const Direction& l, double k, double kprime) {
  check_direction(spec, l);
  if (!(kprime > k)) throw std::invalid_argument("superadditivity: k' must exceed k");
  const auto nice = spec.nice_vectors();
  if (nice.empty()) throw std::invalid_argument("superadditivity: spec has no nice vectors");
  LatticeVector w = nice.front();
  for (const auto& v : nice)
    if (v.dot(l.span()) > w.dot(l.span())) w = v;
  SuperadditivityCheck c;
  c.m = m;
  c.n = n;
  c.k = k;
  c.kprime = kprime;
  c.r = clearance_steps(spec, w, l);
  if (n <= c.r) throw std::invalid_argument("superadditivity: n must exceed r");
  c.log_c = static_cast<double>(c.r) * std::log(spec.c);

  auto delta = [&](std::size_t horizon, double kk, std::uint64_t index) {
    McOptions o = opt;
    o.seed = derived_seed(opt.seed, "delta", index);
    auto p = estimate_event(spec, o, horizon, Event{EventKind::hit_noback, l, kk});
    return rate_point(kk, p, 1.0);
  };
  c.lhs = delta(m + n, k, 0);
  c.first = delta(m, k, 1);
  c.second = delta(n - c.r, kprime, 2);
  c.censored = c.lhs.censored || c.first.censored || c.second.censored;
  c.margin = c.lhs.value - (c.first.value + c.second.value + c.log_c);
  c.pooled_se = pooled({c.lhs.se, c.first.se, c.second.se});
  c.pass = !c.censored && c.margin >= -3.0 * c.pooled_se;
  return c;
}

std::pair<double, double> log_mean_exp(const std::vector<double>& a, std::size_t batches) {
  if (a.empty()) throw std::invalid_argument("log_mean_exp: no samples");
  double mx = a.front();
  for (double x : a) mx = std::max(mx, x);
  const std::size_t n = a.size();
  batches = std::max<std::size_t>(2, std::min(batches, n));
  std::vector<double> batch_sum(batches, 0.0);
  std::vector<std::size_t> batch_count(batches, 0);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = std::exp(a[i] - mx);
    total += e;
    const std::size_t b = i * batches / n;
    batch_sum[b] += e;
    ++batch_count[b];
  }
  const double mean = total / static_cast<double>(n);
  double var = 0.0;
  for (std::size_t b = 0; b < batches; ++b) {
    const double d = batch_sum[b] / static_cast<double>(batch_count[b]) - mean;
    var += d * d;
  }
  var /= static_cast<double>(batches - 1);
  const double se_mean = std::sqrt(var / static_cast<double>(batches));
  return {mx + std::log(mean), se_mean / mean};
}

MgfCurve estimate_mgf(const EnvironmentSpec& spec, const McOptions& opt, std::size_t n,
                      const std::vector<std::vector<double>>& lambdas) {
  check_samples(opt);
  const double L = spec.bound();
  for (const auto& lam : lambdas) {
    if (lam.size() != spec.dimension) throw DimensionError("estimate_mgf: lambda dimension mismatch");
    double norm = 0.0;
    for (double x : lam) norm += x * x;
    norm = std::sqrt(norm);
    if (norm * L * static_cast<double>(n) > 700.0)
      throw std::invalid_argument("estimate_mgf: |lambda| L n = " + format_number(norm * L * n) +
                                  " exceeds 700; use a smaller |lambda| or n");
  }
  const FieldHandle base(spec, opt.seed);
  std::vector<LatticeVector> xs(opt.samples);
  parallel_for(opt.samples, opt.workers, [&](std::size_t i) {
    xs[i] = position_at(run_walk(base.with_seed(sample_seed(opt.seed, i)), n), n);
  });
  MgfCurve curve;
  curve.n = n;
  std::vector<double> a(opt.samples);
  for (const auto& lam : lambdas) {
    MgfPoint pt;
    pt.lambda = lam;
    pt.value.samples = opt.samples;
    pt.value.seed = opt.seed;
    pt.value.definition = "Lambda_n/n";
    const bool zero = std::all_of(lam.begin(), lam.end(), [](double x) { return x == 0.0; });
    if (!zero) {
      for (std::size_t i = 0; i < opt.samples; ++i) a[i] = xs[i].dot(lam);
      auto [lme, se] = log_mean_exp(a);
      pt.value.value = lme / static_cast<double>(n);
      pt.value.std_error = se / static_cast<double>(n);
    }
    curve.points.push_back(std::move(pt));
  }
  return curve;
}

AssembledLambda assemble_lambda(const RateCurve& rate, const std::vector<double>& lambda) {
  AssembledLambda out;
  if (lambda.size() != rate.direction.size()) throw DimensionError("assemble_lambda: dimension mismatch");
  double norm = 0.0, along = 0.0;
  for (std::size_t j = 0; j < lambda.size(); ++j) {
    norm += lambda[j] * lambda[j];
    along += lambda[j] * rate.direction[j];
  }
  norm = std::sqrt(norm);
  if (norm == 0.0) return out;
  if (rate.points.empty() || along < norm * (1.0 - 1e-9)) {
    out.censored = true;
    return out;
  }
  // phi is interpolated linearly in k, so the maximum of |lambda| k + phi(k)
  // is attained at a grid point.
  for (const auto& p : rate.points) {
    if (p.censored) continue;
    out.value = std::max(out.value, norm * p.k + p.value);
  }
  return out;
}

std::size_t LambdaGrid::size() const {
  std::size_t s = 1;
  for (const auto& a : axes) s *= a.size();
  return s;
}

std::vector<double> LambdaGrid::point(std::size_t flat) const {
  std::vector<double> p(axes.size());
  for (std::size_t j = axes.size(); j-- > 0;) {
    p[j] = axes[j][flat % axes[j].size()];
    flat /= axes[j].size();
  }
  return p;
}

std::vector<std::vector<double>> grid_points(const std::vector<std::vector<double>>& axes) {
  LambdaGrid g;
  g.axes = axes;
  std::vector<std::vector<double>> out;
  for (std::size_t i = 0; i < g.size(); ++i) out.push_back(g.point(i));
  return out;
}

LambdaGrid grid_from_mgf(const MgfCurve& curve, const std::vector<std::vector<double>>& axes) {
  LambdaGrid g;
  g.axes = axes;
  if (curve.points.size() != g.size()) throw std::invalid_argument("grid_from_mgf: curve is not on the product grid");
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (curve.points[i].lambda != g.point(i)) throw std::invalid_argument("grid_from_mgf: point order mismatch");
    g.values.push_back(curve.points[i].value.value);
    g.se.push_back(curve.points[i].value.std_error);
  }
  return g;
}

ConjugateCurve legendre(const LambdaGrid& grid, const std::vector<std::vector<double>>& xs) {
  const std::size_t d = grid.dim(), total = grid.size();
  if (d == 0 || grid.values.size() != total) throw std::invalid_argument("legendre: malformed grid");
  const bool have_se = grid.se.size() == total;
  auto se = [&](std::size_t i) { return have_se ? grid.se[i] : 0.0; };

  // Midpoint (chord) convexity along every axis.
  std::vector<std::size_t> stride(d, 1);
  for (std::size_t j = d - 1; j-- > 0;) stride[j] = stride[j + 1] * grid.axes[j + 1].size();
  for (std::size_t i = 0; i < total; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      const std::size_t pos = (i / stride[j]) % grid.axes[j].size();
      if (pos == 0 || pos + 1 >= grid.axes[j].size()) continue;
      const auto& ax = grid.axes[j];
      const double a = (ax[pos + 1] - ax[pos]) / (ax[pos + 1] - ax[pos - 1]);
      const double chord = a * grid.values[i - stride[j]] + (1.0 - a) * grid.values[i + stride[j]];
      const double tol = 3.0 * pooled({se(i), a * se(i - stride[j]), (1.0 - a) * se(i + stride[j])}) + 1e-9;
      if (grid.values[i] > chord + tol) {
        throw ConvexityError("legendre: Lambda is not convex along axis " + std::to_string(j) + " at point " +
                             std::to_string(i) + " (value " + format_number(grid.values[i]) + " > chord " +
                             format_number(chord) + ")");
      }
    }
  }

  std::vector<std::vector<double>> lambdas;
  std::vector<bool> interior;
  ConjugateCurve out;
  double h = 0.0;
  for (const auto& ax : grid.axes)
    for (std::size_t p = 1; p < ax.size(); ++p) h = std::max(h, ax[p] - ax[p - 1]);
  for (std::size_t i = 0; i < total; ++i) {
    auto p = grid.point(i);
    bool in = true;
    double norm = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      norm += p[j] * p[j];
      if (p[j] == grid.axes[j].front() || p[j] == grid.axes[j].back()) in = false;
    }
    out.lambda_radius = std::max(out.lambda_radius, std::sqrt(norm));
    lambdas.push_back(std::move(p));
    interior.push_back(in);
  }

  auto dotv = [](const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) s += a[j] * b[j];
    return s;
  };
  double xmax = 0.0;
  for (const auto& x : xs) {
    if (x.size() != d) throw DimensionError("legendre: x dimension mismatch");
    ConjugatePoint cp;
    cp.x = x;
    cp.value = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < total; ++i) {
      const double v = dotv(lambdas[i], x) - grid.values[i];
      if (v > cp.value) {
        cp.value = v;
        cp.argmax = lambdas[i];
      }
    }
    xmax = std::max(xmax, std::sqrt(dotv(x, x)));
    out.points.push_back(std::move(cp));
  }

  // Exposed on the grid: some interior maximizer lambda separates x strictly
  // from every other grid point, lambda . x - L*(x) > lambda . x' - L*(x').
  for (std::size_t a = 0; a < out.points.size(); ++a) {
    auto& cp = out.points[a];
    const double tie = 1e-12 * (1.0 + std::abs(cp.value));
    for (std::size_t i = 0; i < total && !cp.exposed; ++i) {
      if (!interior[i]) continue;
      if (dotv(lambdas[i], cp.x) - grid.values[i] < cp.value - tie) continue;
      const double own = dotv(lambdas[i], cp.x) - cp.value;
      bool strict = true;
      for (std::size_t b = 0; b < out.points.size() && strict; ++b) {
        if (b == a) continue;
        const double other = dotv(lambdas[i], out.points[b].x) - out.points[b].value;
        if (!(own > other + tie)) strict = false;
      }
      cp.exposed = strict;
    }
  }
  double max_se = 0.0;
  for (std::size_t i = 0; i < total; ++i) max_se = std::max(max_se, se(i));
  out.slack = 0.5 * h * std::sqrt(static_cast<double>(d)) * xmax + 3.0 * max_se;
  return out;
}

FinitenessCheck finiteness_check(const ConjugateCurve& conj, double kappa, double c, double slack) {
  FinitenessCheck f;
  f.kappa = kappa;
  f.bound = -std::log(c);
  for (const auto& p : conj.points) {
    double norm = 0.0;
    for (double x : p.x) norm += x * x;
    if (std::sqrt(norm) > kappa + 1e-12) continue;
    ++f.checked;
    const double excess = p.value - (f.bound + slack);
    if (excess > 0.0) {
      ++f.violations;
      f.worst_excess = std::max(f.worst_excess, excess);
    }
  }
  return f;
}

GeBounds gartner_ellis_bounds(const ConjugateCurve& conj, const HalfSpace& closed_set, const Box& open_set) {
  GeBounds g;
  g.slack = conj.slack;
  double best_closed = std::numeric_limits<double>::infinity();
  double best_open = std::numeric_limits<double>::infinity();
  for (const auto& p : conj.points) {
    double s = 0.0;
    for (std::size_t j = 0; j < p.x.size(); ++j) s += p.x[j] * closed_set.l[j];
    if (s >= closed_set.k - 1e-12) best_closed = std::min(best_closed, p.value);
    if (!p.exposed || open_set.lo.empty()) continue;
    bool inside = true;
    for (std::size_t j = 0; j < p.x.size(); ++j)
      if (!(p.x[j] > open_set.lo[j] && p.x[j] < open_set.hi[j])) inside = false;
    if (inside) best_open = std::min(best_open, p.value);
  }
  g.upper_censored = std::isinf(best_closed);
  g.upper = g.upper_censored ? kNegInf : -best_closed;
  g.lower_censored = std::isinf(best_open);
  g.lower = g.lower_censored ? kNegInf : -best_open;
  return g;
}

GeBounds gartner_ellis_bounds(const ConjugateCurve& conj, const HalfSpace& closed_set) {
  return gartner_ellis_bounds(conj, closed_set, Box{});
}

LlnCurve lln_curve(const EnvironmentSpec& spec, const McOptions& opt, const std::vector<std::size_t>& ns,
                   const Direction& l, double t) {
  check_samples(opt);
  check_direction(spec, l);
  if (ns.empty()) throw std::invalid_argument("lln: empty n list");
  for (std::size_t i = 1; i < ns.size(); ++i)
    if (ns[i] <= ns[i - 1]) throw std::invalid_argument("lln: n list must be increasing");
  const std::size_t d = spec.dimension, nn = ns.size();
  const FieldHandle base(spec, opt.seed);
  std::vector<std::int64_t> coords(opt.samples * nn * d);
  parallel_for(opt.samples, opt.workers, [&](std::size_t i) {
    const Trajectory traj = run_walk(base.with_seed(sample_seed(opt.seed, i)), ns.back());
    for (std::size_t a = 0; a < nn; ++a) {
      auto x = position_at(traj, ns[a]);
      for (std::size_t j = 0; j < d; ++j) coords[(i * nn + a) * d + j] = x[j];
    }
  });
  LlnCurve curve;
  curve.t = t;
  const double N = static_cast<double>(opt.samples);
  for (std::size_t a = 0; a < nn; ++a) {
    LlnRow row;
    row.n = ns[a];
    const double n = static_cast<double>(ns[a]);
    std::vector<double> sum(d, 0.0), sum2(d, 0.0);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < opt.samples; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const double x = static_cast<double>(coords[(i * nn + a) * d + j]);
        sum[j] += x;
        sum2[j] += x * x;
        dot += x * l[j];
      }
      if (reaches_level(dot, n * t)) ++hits;
    }
    double norm2 = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double mean = sum[j] / N;
      const double var = std::max(0.0, (sum2[j] - N * mean * mean) / (N - 1.0));
      row.mean_over_n.push_back(mean / n);
      row.se.push_back(std::sqrt(var / N) / n);
      norm2 += (mean / n) * (mean / n);
    }
    row.norm_over_n = std::sqrt(norm2);
    double v = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double w = row.norm_over_n > 0.0 ? row.mean_over_n[j] / row.norm_over_n : 1.0;
      v += w * w * row.se[j] * row.se[j];
    }
    row.norm_se = std::sqrt(v);
    row.tail = rate_point(t, bernoulli_estimate(hits, opt.samples, opt.seed, "tail"), n);
    curve.rows.push_back(std::move(row));
  }
  // Least squares of log P against n over uncensored rows.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& row : curve.rows) {
    if (row.tail.censored) continue;
    const double x = static_cast<double>(row.n), y = std::log(row.tail.probability.value);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++curve.fitted_points;
  }
  if (curve.fitted_points >= 2) {
    const double m = static_cast<double>(curve.fitted_points);
    curve.slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  } else {
    curve.slope = std::numeric_limits<double>::quiet_NaN();
  }
  return curve;
}

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string rate_curve_csv(const std::vector<RateCurve>& curves) {
  std::string out = "n,k,kind,value,se,samples,censored\n";
  for (const auto& c : curves)
    for (const auto& p : c.points)
      out += std::to_string(c.n) + "," + format_number(p.k) + "," + to_string(c.kind) + "," +
             format_number(p.value) + "," + format_number(p.se) + "," + std::to_string(p.probability.samples) + "," +
             (p.censored ? "1" : "0") + "\n";
  return out;
}

std::string mgf_csv(const std::vector<MgfCurve>& curves) {
  std::size_t d = 0;
  for (const auto& c : curves)
    if (!c.points.empty()) d = c.points.front().lambda.size();
  std::string out = "n";
  for (std::size_t j = 0; j < d; ++j) out += ",lambda" + std::to_string(j + 1);
  out += ",value,se\n";
  for (const auto& c : curves)
    for (const auto& p : c.points) {
      out += std::to_string(c.n);
      for (double x : p.lambda) out += "," + format_number(x);
      out += "," + format_number(p.value.value) + "," + format_number(p.value.std_error) + "\n";
    }
  return out;
}

std::string conjugate_csv(const ConjugateCurve& conj) {
  const std::size_t d = conj.points.empty() ? 0 : conj.points.front().x.size();
  std::string out;
  for (std::size_t j = 0; j < d; ++j) out += "x" + std::to_string(j + 1) + ",";
  out += "value,exposed_flag\n";
  for (const auto& p : conj.points) {
    for (double x : p.x) out += format_number(x) + ",";
    out += format_number(p.value) + "," + (p.exposed ? "1" : "0") + "\n";
  }
  return out;
}

std::string lln_csv(const LlnCurve& curve) {
  std::string out = "n,coord,mean_over_n,se\n";
  for (const auto& row : curve.rows)
    for (std::size_t j = 0; j < row.mean_over_n.size(); ++j)
      out += std::to_string(row.n) + "," + std::to_string(j + 1) + "," + format_number(row.mean_over_n[j]) + "," +
             format_number(row.se[j]) + "\n";
  return out;
}

}  // namespace dwre
