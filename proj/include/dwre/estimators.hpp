#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dwre/environment.hpp"
#include "dwre/event.hpp"
#include "dwre/lattice.hpp"
#include "dwre/walk.hpp"

namespace dwre {

struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  std::string definition;
  /// Zero successes: value is 0 and `upper` holds the rule-of-three bound.
  bool censored = false;
  double upper = 1.0;
};

/// Bernoulli estimate from a success count.
Estimate bernoulli_estimate(std::size_t successes, std::size_t samples, std::uint64_t seed, std::string definition);

struct McOptions {
  std::uint64_t seed = 1;
  std::size_t samples = 10000;
  unsigned workers = 1;
};

inline constexpr std::size_t kMinSamples = 100;

/// Result of evaluating several events on the same set of sampled walks.
struct EventCounts {
  std::vector<std::size_t> successes;  // per event
  std::size_t samples = 0;
  /// Pathwise inclusion failures per event: tail without hit, and
  /// hit_noback without hit (both must stay zero).
  std::size_t tail_not_hit = 0;
  std::size_t noback_not_hit = 0;
};

/// Sample i uses a fresh environment seeded by sample_seed(seed, i).
EventCounts count_events(const EnvironmentSpec& spec, const McOptions& opt, std::size_t n,
                         const std::vector<Event>& events);

Estimate estimate_event(const EnvironmentSpec& spec, const McOptions& opt, std::size_t n, const Event& event);

struct RatePoint {
  double k = 0.0;
  Estimate probability;
  double value = 0.0;  // (1/n) log p, or (1/n) log(3/N) when censored
  double se = 0.0;     // delta method
  bool censored = false;
};

struct RateCurve {
  std::size_t n = 0;
  std::vector<double> direction;
  EventKind kind = EventKind::tail;
  std::vector<RatePoint> points;
};

RatePoint rate_point(double k, const Estimate& p, double scale);

RateCurve rate_curve(const EnvironmentSpec& spec, const McOptions& opt, std::size_t n, const Direction& l,
                     const std::vector<double>& ks, EventKind kind);

/// Several kinds on one sample set; curves come back in `kinds` order.
std::vector<RateCurve> rate_curves(const EnvironmentSpec& spec, const McOptions& opt, std::size_t n,
                                   const Direction& l, const std::vector<double>& ks,
                                   const std::vector<EventKind>& kinds);

struct ShapeCheck {
  std::size_t index = 0;  // middle point (concavity) or right point (monotonicity)
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;
  bool pass = true;
};

/// phi(k_i) >= chord of its neighbours - 3 pooled SE, for uncensored triples.
std::vector<ShapeCheck> concavity_checks(const RateCurve& curve, double sigmas = 3.0);
/// value(k_{i+1}) <= value(k_i) + 3 pooled SE, for uncensored pairs.
std::vector<ShapeCheck> monotonicity_checks(const RateCurve& curve, double sigmas = 3.0);

struct DiagnosticRow {
  std::size_t n = 0;
  RatePoint tail, hit, noback, noback_kprime;
  bool tail_le_hit = true;    // within 3 pooled SE
  bool noback_le_hit = true;  // within 3 pooled SE
  std::size_t tail_not_hit = 0;
  std::size_t noback_not_hit = 0;
  double gap = 0.0;  // hit(k) - hit_noback(k'), reported only
};

struct LemmaReport {
  double k = 0.0, kprime = 0.0;
  std::vector<DiagnosticRow> rows;
  bool gap_shrinks = false;  // trend of |gap| over n, reported only
};

LemmaReport lemma_diagnostics(const EnvironmentSpec& spec, const McOptions& opt, const std::vector<std::size_t>& ns,
                              const Direction& l, double k, double kprime);

struct SuperadditivityCheck {
  std::size_t m = 0, n = 0, r = 0;
  double k = 0.0, kprime = 0.0;
  RatePoint lhs;  // delta(m+n, k), stored unscaled in `value` (log probability)
  RatePoint first, second;  // delta(m, k), delta(n-r, k')
  double log_c = 0.0;       // r log c for the certified step vector
  double margin = 0.0;      // lhs - (first + second + log_c)
  double pooled_se = 0.0;
  bool pass = false;
  bool censored = false;
};

/// Number of forced steps of w needed to clear the dependence range.
std::size_t clearance_steps(const EnvironmentSpec& spec, const LatticeVector& w, const Direction& l);

/// delta(m+n,k) >= delta(m,k) + delta(n-r,k') + r log c - 3 pooled SE, where
/// w is the nice vector with the largest w . l and r = ceil(M / (w . l)) + 1.
SuperadditivityCheck superadditivity_check(const EnvironmentSpec& spec, const McOptions& opt, std::size_t m,
                                           std::size_t n, const Direction& l, double k, double kprime);

struct MgfPoint {
  std::vector<double> lambda;
  Estimate value;  // Lambda_n(lambda) / n
};

struct MgfCurve {
  std::size_t n = 0;
  std::vector<MgfPoint> points;
};

inline constexpr std::size_t kMgfBatches = 20;

/// Throws std::invalid_argument when |lambda| L n > 700.
MgfCurve estimate_mgf(const EnvironmentSpec& spec, const McOptions& opt, std::size_t n,
                      const std::vector<std::vector<double>>& lambdas);

/// Fixed-order log-mean-exp with batch-means delta-method SE; shared by
/// the discrete and continuous estimators. Returns (log mean, SE).
std::pair<double, double> log_mean_exp(const std::vector<double>& a, std::size_t batches = kMgfBatches);

struct AssembledLambda {
  double value = 0.0;
  bool censored = false;
};

/// max{0, max_k (|lambda| k + phi(k))} over the uncensored points of a rate
/// curve whose direction is parallel to lambda. A curve along -lambda or
/// with no usable point gives a censored result.
AssembledLambda assemble_lambda(const RateCurve& rate, const std::vector<double>& lambda);

/// Lambda sampled on a product grid; values in row-major order (last axis fastest).
struct LambdaGrid {
  std::vector<std::vector<double>> axes;
  std::vector<double> values;
  std::vector<double> se;  // optional, same size as values

  std::size_t dim() const { return axes.size(); }
  std::size_t size() const;
  std::vector<double> point(std::size_t flat) const;
};

LambdaGrid grid_from_mgf(const MgfCurve& curve, const std::vector<std::vector<double>>& axes);
/// Product of the axes in row-major order.
std::vector<std::vector<double>> grid_points(const std::vector<std::vector<double>>& axes);

struct ConjugatePoint {
  std::vector<double> x;
  double value = 0.0;
  std::vector<double> argmax;
  bool exposed = false;
};

struct ConjugateCurve {
  std::vector<ConjugatePoint> points;
  double lambda_radius = 0.0;  // max |lambda| on the grid
  double slack = 0.0;          // grid-resolution slack on the values
};

class ConvexityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Lambda*(x) = max over the grid of (lambda . x - Lambda(lambda)). Throws
/// ConvexityError when a midpoint test along an axis fails beyond
/// 3 pooled SE + 1e-9.
ConjugateCurve legendre(const LambdaGrid& grid, const std::vector<std::vector<double>>& xs);

struct FinitenessCheck {
  double kappa = 0.0;
  double bound = 0.0;  // -log c
  std::size_t checked = 0;
  std::size_t violations = 0;
  double worst_excess = 0.0;
};

/// Lambda*(x) <= -log c + slack for every grid x with |x| <= kappa.
FinitenessCheck finiteness_check(const ConjugateCurve& conj, double kappa, double c, double slack);

struct HalfSpace {
  std::vector<double> l;
  double k = 0.0;  // {x . l >= k}
};

struct Box {
  std::vector<double> lo, hi;  // open box
};

struct GeBounds {
  double upper = 0.0;
  double lower = 0.0;
  bool upper_censored = false;
  bool lower_censored = false;
  double slack = 0.0;
};

GeBounds gartner_ellis_bounds(const ConjugateCurve& conj, const HalfSpace& closed_set, const Box& open_set);
GeBounds gartner_ellis_bounds(const ConjugateCurve& conj, const HalfSpace& closed_set);

struct LlnRow {
  std::size_t n = 0;
  std::vector<double> mean_over_n;
  std::vector<double> se;  // per coordinate, of mean_over_n
  double norm_over_n = 0.0;
  double norm_se = 0.0;
  RatePoint tail;  // (1/n) log P(X_n . l >= n t)
};

struct LlnCurve {
  std::vector<LlnRow> rows;
  double t = 0.0;
  double slope = 0.0;  // least squares of log P vs n over uncensored rows
  std::size_t fitted_points = 0;
};

LlnCurve lln_curve(const EnvironmentSpec& spec, const McOptions& opt, const std::vector<std::size_t>& ns,
                   const Direction& l, double t);

// CSV writers: '.' decimal, %.17g, LF endings, header row.
std::string format_number(double x);
std::string rate_curve_csv(const std::vector<RateCurve>& curves);
std::string mgf_csv(const std::vector<MgfCurve>& curves);
std::string conjugate_csv(const ConjugateCurve& conj);
std::string lln_csv(const LlnCurve& curve);

}  // namespace dwre
