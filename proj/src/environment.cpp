#include "dwre/environment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>

#include "dwre/nice_set.hpp"
#include "dwre/rng.hpp"

namespace dwre {

namespace {

constexpr double kProbabilityTolerance = 1e-12;

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

double EnvironmentSpec::bound() const {
  double l = 0.0;
  for (const auto& v : support) l = std::max(l, v.norm());
  return l;
}

std::vector<LatticeVector> EnvironmentSpec::nice_vectors() const {
  std::vector<LatticeVector> out;
  for (auto i : nice_subset)
    if (i < support.size()) out.push_back(support[i]);
  return out;
}

std::vector<SpecViolation> validate_spec(const EnvironmentSpec& spec) {
  std::vector<SpecViolation> report;
  auto add = [&](const char* cond, std::string msg) { report.push_back({cond, std::move(msg)}); };

  if (spec.dimension == 0 || spec.dimension > kMaxDimension) {
    add("(i)", "dimension " + std::to_string(spec.dimension) + " outside [1, " + std::to_string(kMaxDimension) + "]");
    return report;
  }
  if (spec.support.empty()) add("(i)", "support is empty");
  if (spec.support.size() != spec.probabilities.size()) {
    add("(i)", "support has " + std::to_string(spec.support.size()) + " vectors but " +
                   std::to_string(spec.probabilities.size()) + " probabilities");
    return report;
  }
  double total = 0.0;
  for (std::size_t i = 0; i < spec.support.size(); ++i) {
    if (spec.support[i].dim() != spec.dimension)
      add("(i)", "step " + std::to_string(i) + " has dimension " + std::to_string(spec.support[i].dim()));
    if (!(spec.probabilities[i] > 0.0))
      add("(i)", "step " + std::to_string(i) + " has non-positive probability " + fmt(spec.probabilities[i]));
    total += spec.probabilities[i];
  }
  if (!(std::abs(total - 1.0) <= kProbabilityTolerance))
    add("(i)", "probabilities sum to " + fmt(total) + ", not 1");
  if (spec.declared_bound > 0.0) {
    for (std::size_t i = 0; i < spec.support.size(); ++i)
      if (spec.support[i].dim() == spec.dimension && spec.support[i].norm() > spec.declared_bound)
        add("(i)", "step " + spec.support[i].to_string() + " exceeds the bound L = " + fmt(spec.declared_bound));
  }

  if (spec.dependence_range < 0.0) add("(ii)", "dependence range M is negative");
  if (spec.kernel_radius < 0) add("(ii)", "kernel radius K is negative");
  if (spec.kernel_radius == 0 && spec.dependence_range >= 1.0)
    add("(ii)", "M = " + fmt(spec.dependence_range) + " needs a block-factor construction (set K and epsilon)");
  if (spec.kernel_radius > 0) {
    if (spec.dependence_range < 2.0 * spec.kernel_radius)
      add("(ii)", "M = " + fmt(spec.dependence_range) + " is below 2K = " + std::to_string(2 * spec.kernel_radius));
    if (!(spec.mixing >= 0.0 && spec.mixing < 1.0)) add("(ii)", "epsilon must lie in [0, 1)");
  }

  if (spec.nice_subset.empty()) {
    add("(iii)", "nice subset is empty");
  } else {
    bool indices_ok = true;
    for (auto i : spec.nice_subset)
      if (i >= spec.support.size()) {
        add("(iii)", "nice index " + std::to_string(i) + " out of range");
        indices_ok = false;
      }
    if (indices_ok) {
      auto vectors = spec.nice_vectors();
      try {
        auto cert = nice::is_nice(vectors);
        if (!cert.nice) {
          std::string l;
          for (std::size_t j = 0; j < cert.violating_direction.size(); ++j)
            l += (j ? "," : "") + fmt(cert.violating_direction[j]);
          add("(iii)", "nice subset fails niceness: l = (" + l + ") has no positive dot product");
        }
      } catch (const std::exception& e) {
        add("(iii)", std::string("nice subset invalid: ") + e.what());
      }
      if (!(spec.c > 0.0)) add("(iii)", "ellipticity constant c must be positive");
      const double reserve = spec.kernel_radius > 0 ? 1.0 - spec.mixing : 1.0;
      for (auto i : spec.nice_subset) {
        if (reserve * spec.probabilities[i] < spec.c) {
          add("(iii)", "nice step " + spec.support[i].to_string() + " has guaranteed probability " +
                           fmt(reserve * spec.probabilities[i]) + " < c = " + fmt(spec.c));
        }
      }
    }
  }
  return report;
}

std::string format_violations(const std::vector<SpecViolation>& report) {
  std::string out;
  for (const auto& v : report) out += "condition " + v.condition + ": " + v.message + "\n";
  return out;
}

std::vector<LatticeVector> ball_offsets(std::size_t dim, int radius) {
  std::vector<LatticeVector> out;
  LatticeVector w(dim);
  const std::int64_t r2 = std::int64_t{radius} * radius;
  std::function<void(std::size_t, std::int64_t)> rec = [&](std::size_t axis, std::int64_t used) {
    if (axis == dim) {
      out.push_back(w);
      return;
    }
    for (std::int64_t x = -radius; x <= radius; ++x) {
      if (used + x * x > r2) continue;
      w[axis] = x;
      rec(axis + 1, used + x * x);
    }
    w[axis] = 0;
  };
  rec(0, 0);
  return out;
}

EnvironmentSpec build_block_factor(const EnvironmentSpec& iid_spec, int kernel_radius, double mixing) {
  if (!iid_spec.iid() || iid_spec.dependence_range >= 1.0)
    throw std::invalid_argument("build_block_factor: input spec must be iid");
  if (kernel_radius < 1) throw std::invalid_argument("build_block_factor: K must be at least 1 (use the iid spec)");
  if (!(mixing >= 0.0 && mixing < 1.0)) throw std::invalid_argument("build_block_factor: epsilon must lie in [0, 1)");
  EnvironmentSpec out = iid_spec;
  out.kernel_radius = kernel_radius;
  out.mixing = mixing;
  out.dependence_range = 2.0 * kernel_radius;
  double pmin = 1.0;
  for (auto i : out.nice_subset)
    if (i < out.probabilities.size()) pmin = std::min(pmin, out.probabilities[i]);
  out.c = (1.0 - mixing) * pmin;
  return out;
}

FieldHandle::FieldHandle(EnvironmentSpec spec, std::uint64_t master_seed) : seed_(master_seed) {
  if (spec.support.empty() || spec.support.size() != spec.probabilities.size())
    throw std::invalid_argument("FieldHandle: malformed support");
  auto data = std::make_shared<Data>();
  double acc = 0.0;
  for (double p : spec.probabilities) {
    acc += p;
    data->cumulative.push_back(acc);
  }
  if (spec.kernel_radius > 0) data->kernel = ball_offsets(spec.dimension, spec.kernel_radius);
  data->spec = std::move(spec);
  data_ = std::move(data);
}

FieldHandle FieldHandle::with_seed(std::uint64_t master_seed) const {
  FieldHandle h = *this;
  h.seed_ = master_seed;
  return h;
}

std::size_t FieldHandle::inverse_cdf(double u) const {
  const auto& cum = data_->cumulative;
  u *= cum.back();
  auto it = std::upper_bound(cum.begin(), cum.end(), u);
  if (it == cum.end()) return cum.size() - 1;
  return static_cast<std::size_t>(it - cum.begin());
}

double FieldHandle::latent(std::uint64_t label, const LatticeVector& z) const {
  CounterRng rng(StreamKey(seed_, data_->spec.seed_domain).add(label).add_coords(z.coords()));
  return rng.uniform();
}

std::size_t FieldHandle::sample_index(const LatticeVector& z) const {
  static constexpr std::uint64_t kOwn = hash_label("own"), kMix = hash_label("mix"), kShared = hash_label("shared"),
                                kPriority = hash_label("priority");
  const auto& spec = data_->spec;
  if (z.dim() != spec.dimension)
    throw DimensionError("sample_eta: site " + z.to_string() + " does not have dimension " +
                         std::to_string(spec.dimension));
  if (!z.in_coordinate_range()) throw RangeError("sample_eta: site " + z.to_string() + " outside coordinate range");
  if (!overrides_.empty()) {
    if (auto it = overrides_.find(z); it != overrides_.end()) return it->second;
  }
  if (spec.kernel_radius == 0) return inverse_cdf(latent(kOwn, z));
  if (latent(kMix, z) < 1.0 - spec.mixing) return inverse_cdf(latent(kOwn, z));
  // Copy the shared draw of the kernel site with the highest priority; the
  // choice depends only on priorities, so the copied draw stays uniform.
  double best = -1.0;
  const LatticeVector* leader = nullptr;
  for (const auto& w : data_->kernel) {
    LatticeVector site = z + w;
    if (!site.in_coordinate_range()) throw RangeError("sample_eta: kernel leaves coordinate range");
    const double p = latent(kPriority, site);
    if (p > best) {
      best = p;
      leader = &w;
    }
  }
  return inverse_cdf(latent(kShared, z + *leader));
}

void FieldHandle::set_override(const LatticeVector& z, std::size_t support_index) {
  if (support_index >= data_->spec.support.size()) throw std::out_of_range("set_override: support index out of range");
  if (z.dim() != data_->spec.dimension) throw DimensionError("set_override: dimension mismatch");
  overrides_[z] = support_index;
}

EnvironmentSpec spec_from_config(const Config& cfg, const std::string& section) {
  if (!cfg.has_section(section)) throw ConfigError("missing [" + section + "] section");
  EnvironmentSpec spec;
  auto dim = cfg.get(section, "dimension");
  if (!dim) throw ConfigError("missing key 'dimension' in [" + section + "]");
  const auto d = parse_int(dim->value, dim->line);
  if (d < 1 || d > static_cast<std::int64_t>(kMaxDimension))
    throw ConfigError("dimension must be in [1, " + std::to_string(kMaxDimension) + "]", dim->line);
  spec.dimension = static_cast<std::size_t>(d);

  for (const auto& e : cfg.all(section, "step")) {
    auto colon = e.value.find(':');
    if (colon == std::string::npos) throw ConfigError("step needs the form 'dx ... : prob'", e.line);
    auto coords = split_ws(e.value.substr(0, colon));
    if (coords.size() != spec.dimension)
      throw ConfigError("step has " + std::to_string(coords.size()) + " coordinates, expected " +
                            std::to_string(spec.dimension),
                        e.line);
    LatticeVector v(spec.dimension);
    for (std::size_t j = 0; j < coords.size(); ++j) v[j] = parse_int(coords[j], e.line);
    spec.support.push_back(v);
    spec.probabilities.push_back(parse_double(e.value.substr(colon + 1), e.line));
  }
  if (spec.support.empty()) throw ConfigError("no 'step' entries in [" + section + "]");

  if (auto e = cfg.get(section, "nice")) {
    for (const auto& tok : split(e->value, ',')) {
      const auto i = parse_int(tok, e->line);
      if (i < 0) throw ConfigError("nice index must be nonnegative", e->line);
      spec.nice_subset.push_back(static_cast<std::size_t>(i));
    }
  } else {
    for (std::size_t i = 0; i < spec.support.size(); ++i) spec.nice_subset.push_back(i);
  }
  spec.declared_bound = cfg.get_double(section, "L", 0.0);
  spec.seed_domain = cfg.get_string(section, "domain", "eta");

  const auto k = cfg.get_int(section, "K", 0);
  if (k > 0) {
    const double eps = cfg.get_double(section, "epsilon", 0.0);
    if (!(eps >= 0.0 && eps < 1.0)) throw ConfigError("epsilon must lie in [0, 1)", cfg.get(section, "epsilon")->line);
    spec = build_block_factor(spec, static_cast<int>(k), eps);
    if (cfg.has(section, "c")) spec.c = cfg.get_double(section, "c");
    if (cfg.has(section, "M")) spec.dependence_range = cfg.get_double(section, "M");
  } else {
    spec.c = cfg.get_double(section, "c", 0.0);
    if (spec.c == 0.0) {
      double pmin = 1.0;
      for (auto i : spec.nice_subset)
        if (i < spec.probabilities.size()) pmin = std::min(pmin, spec.probabilities[i]);
      spec.c = pmin;
    }
    spec.dependence_range = cfg.get_double(section, "M", 0.0);
  }
  return spec;
}

std::string spec_to_config(const EnvironmentSpec& spec) {
  std::ostringstream out;
  out << "[environment]\n";
  out << "dimension = " << spec.dimension << "\n";
  for (std::size_t i = 0; i < spec.support.size(); ++i) {
    out << "step =";
    for (auto x : spec.support[i].coords()) out << ' ' << x;
    out << " : " << fmt(spec.probabilities[i]) << "\n";
  }
  out << "nice = ";
  for (std::size_t i = 0; i < spec.nice_subset.size(); ++i) out << (i ? ", " : "") << spec.nice_subset[i];
  out << "\nc = " << fmt(spec.c) << "\n";
  out << "M = " << fmt(spec.dependence_range) << "\n";
  if (spec.kernel_radius > 0) out << "K = " << spec.kernel_radius << "\nepsilon = " << fmt(spec.mixing) << "\n";
  if (spec.declared_bound > 0.0) out << "L = " << fmt(spec.declared_bound) << "\n";
  if (spec.seed_domain != "eta") out << "domain = " << spec.seed_domain << "\n";
  return out.str();
}

}  // namespace dwre
