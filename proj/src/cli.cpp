#include "dwre/cli.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <stdexcept>

#include <json.hpp>

#include "dwre/environment.hpp"
#include "dwre/estimators.hpp"
#include "dwre/event.hpp"
#include "dwre/nice_set.hpp"
#include "dwre/oracle.hpp"
#include "dwre/parallel.hpp"
#include "dwre/rng.hpp"
#include "dwre/teleport.hpp"

namespace dwre::cli {

namespace {

using json = nlohmann::ordered_json;

struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<double> doubles(const Config& cfg, const std::string& key) {
  std::vector<double> out;
  for (const auto& e : cfg.all("grid", key))
    for (double v : parse_doubles(e.value, e.line)) out.push_back(v);
  return out;
}

std::vector<std::vector<double>> vectors(const Config& cfg, const std::string& key) {
  std::vector<std::vector<double>> out;
  for (const auto& e : cfg.all("grid", key)) out.push_back(parse_doubles(e.value, e.line));
  return out;
}

std::vector<std::size_t> sizes(const Config& cfg, const std::string& key) {
  std::vector<std::size_t> out;
  for (const auto& e : cfg.all("grid", key)) {
    for (const auto& tok : split_ws(e.value)) {
      const auto v = parse_int(tok, e.line);
      if (v < 1) throw ConfigError("'" + key + "' values must be positive", e.line);
      out.push_back(static_cast<std::size_t>(v));
    }
  }
  return out;
}

template <typename T>
const std::vector<T>& nonempty(const std::vector<T>& v, const std::string& key) {
  if (v.empty()) throw ValidationError("[grid] needs at least one '" + key + "' value");
  return v;
}

std::vector<std::string> words(const Config& cfg, const std::string& key, const std::string& fallback) {
  std::vector<std::string> out;
  for (const auto& e : cfg.all("grid", key))
    for (const auto& tok : split_ws(e.value)) out.push_back(tok);
  if (out.empty()) out.push_back(fallback);
  return out;
}

std::vector<double> direction(const Config& cfg, std::size_t dim) {
  auto v = vectors(cfg, "direction");
  if (v.size() > 1) throw ConfigError("[grid] direction given more than once", cfg.all("grid", "direction")[1].line);
  std::vector<double> l(dim, 0.0);
  if (v.empty()) {
    l[0] = 1.0;
    return l;
  }
  if (v[0].size() != dim) throw ValidationError("direction has the wrong dimension");
  return Direction(v[0]).values();
}

class Writer {
 public:
  explicit Writer(std::filesystem::path dir) : dir_(std::move(dir)) { std::filesystem::create_directories(dir_); }

  void write(const std::string& name, const std::string& content) {
    std::ofstream out(dir_ / name, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + (dir_ / name).string());
    out << content;
    files_.push_back(name);
  }

  const std::vector<std::string>& files() const { return files_; }

 private:
  std::filesystem::path dir_;
  std::vector<std::string> files_;
};

struct Context {
  const Config& cfg;
  McOptions mc;
  Writer& out;
  bool censored_only = false;
  std::string message;
};

void require_samples(const McOptions& mc) {
  if (mc.samples < kMinSamples) {
    throw ValidationError("samples = " + std::to_string(mc.samples) + " is below the minimum of 100");
  }
}

EnvironmentSpec discrete_spec(const Config& cfg) {
  EnvironmentSpec spec = spec_from_config(cfg);
  auto report = validate_spec(spec);
  if (!report.empty()) throw ValidationError(format_violations(report));
  return spec;
}

bool all_censored(const std::vector<RatePoint>& points) {
  for (const auto& p : points)
    if (!p.censored) return false;
  return !points.empty();
}

std::string shape_csv(const std::vector<RateCurve>& curves) {
  std::string s = "n,kind,check,index,lhs,rhs,slack,pass\n";
  for (const auto& c : curves) {
    auto emit = [&](const char* name, const std::vector<ShapeCheck>& checks) {
      for (const auto& x : checks) {
        s += std::to_string(c.n) + "," + to_string(c.kind) + "," + name + "," + std::to_string(x.index) + "," +
             format_number(x.lhs) + "," + format_number(x.rhs) + "," + format_number(x.slack) + "," +
             (x.pass ? "1" : "0") + "\n";
      }
    };
    emit("concavity", concavity_checks(c));
    emit("monotonicity", monotonicity_checks(c));
  }
  return s;
}

void task_rate_discrete(Context& ctx) {
  require_samples(ctx.mc);
  const auto spec = discrete_spec(ctx.cfg);
  const auto ns = nonempty(sizes(ctx.cfg, "n"), "n");
  const auto ks = nonempty(doubles(ctx.cfg, "k"), "k");
  std::vector<EventKind> kinds;
  for (const auto& w : words(ctx.cfg, "kind", "tail")) kinds.push_back(parse_event_kind(w));
  const Direction l(direction(ctx.cfg, spec.dimension));
  std::vector<RateCurve> curves;
  std::vector<RatePoint> all;
  for (std::size_t n : ns) {
    for (auto& c : rate_curves(spec, ctx.mc, n, l, ks, kinds)) {
      all.insert(all.end(), c.points.begin(), c.points.end());
      curves.push_back(std::move(c));
    }
  }
  ctx.out.write("rate.csv", rate_curve_csv(curves));
  ctx.out.write("shape.csv", shape_csv(curves));
  ctx.censored_only = all_censored(all);
}

void task_rate_continuous(Context& ctx) {
  require_samples(ctx.mc);
  const auto field = cont::field_from_config(ctx.cfg);
  const auto tele = cont::teleport_from_config(ctx.cfg, field);
  const cont::TeleportWorld world(field, tele, ctx.mc.seed);
  const auto ts = nonempty(doubles(ctx.cfg, "t"), "t");
  const auto ks = nonempty(doubles(ctx.cfg, "k"), "k");
  std::vector<cont::ContinuousKind> kinds;
  for (const auto& w : words(ctx.cfg, "kind", "tail")) kinds.push_back(cont::parse_continuous_kind(w));
  const auto l = direction(ctx.cfg, field.dimension);
  auto curves = cont::estimate_continuous(world, ctx.mc, l, ks, ts, kinds);
  std::vector<RateCurve> as_discrete;
  std::vector<RatePoint> all;
  for (const auto& c : curves) {
    as_discrete.push_back(c.as_rate_curve());
    all.insert(all.end(), c.points.begin(), c.points.end());
  }
  ctx.out.write("rate.csv", cont::continuous_rate_csv(curves));
  ctx.out.write("shape.csv", shape_csv(as_discrete));
  ctx.censored_only = all_censored(all);
}

void task_mgf(Context& ctx) {
  require_samples(ctx.mc);
  const auto spec = discrete_spec(ctx.cfg);
  const auto ns = nonempty(sizes(ctx.cfg, "n"), "n");
  const auto lambdas = nonempty(vectors(ctx.cfg, "lambda"), "lambda");
  for (const auto& lam : lambdas)
    if (lam.size() != spec.dimension) throw ValidationError("lambda has the wrong dimension");
  std::vector<MgfCurve> curves;
  for (std::size_t n : ns) curves.push_back(estimate_mgf(spec, ctx.mc, n, lambdas));
  ctx.out.write("mgf.csv", mgf_csv(curves));
}

void task_conjugate(Context& ctx) {
  require_samples(ctx.mc);
  const auto spec = discrete_spec(ctx.cfg);
  const auto ns = nonempty(sizes(ctx.cfg, "n"), "n");
  const auto axes = vectors(ctx.cfg, "axis");
  if (axes.size() != spec.dimension) {
    throw ValidationError("[grid] needs one 'axis' entry per dimension (" + std::to_string(spec.dimension) + ")");
  }
  const auto xs = nonempty(vectors(ctx.cfg, "x"), "x");
  for (const auto& x : xs)
    if (x.size() != spec.dimension) throw ValidationError("x has the wrong dimension");
  auto curve = estimate_mgf(spec, ctx.mc, ns.front(), grid_points(axes));
  auto conj = legendre(grid_from_mgf(curve, axes), xs);
  ctx.out.write("mgf.csv", mgf_csv({curve}));
  ctx.out.write("conjugate.csv", conjugate_csv(conj));
}

void task_lln(Context& ctx) {
  require_samples(ctx.mc);
  const auto spec = discrete_spec(ctx.cfg);
  const auto ns = nonempty(sizes(ctx.cfg, "n"), "n");
  const Direction l(direction(ctx.cfg, spec.dimension));
  const double t = ctx.cfg.get_double("grid", "threshold", 0.0);
  auto curve = lln_curve(spec, ctx.mc, ns, l, t);
  ctx.out.write("lln.csv", lln_csv(curve));
}

json oracle_json(const oracle::Result& r) {
  json j;
  j["value"] = r.value;
  j["abs_error_bound"] = r.abs_error_bound;
  j["branches"] = r.branches;
  return j;
}

void task_oracle(Context& ctx) {
  const auto spec = discrete_spec(ctx.cfg);
  const auto ns = nonempty(sizes(ctx.cfg, "n"), "n");
  const Direction l(direction(ctx.cfg, spec.dimension));
  json results = json::array();
  for (const auto& kind : words(ctx.cfg, "kind", "tail")) {
    for (std::size_t n : ns) {
      if (kind == "mgf") {
        for (const auto& lam : nonempty(vectors(ctx.cfg, "lambda"), "lambda")) {
          if (lam.size() != spec.dimension) throw ValidationError("lambda has the wrong dimension");
          json j = oracle_json(oracle::exact_mgf(spec, n, lam));
          j["kind"] = kind;
          j["n"] = n;
          j["lambda"] = lam;
          results.push_back(j);
        }
        continue;
      }
      const EventKind ek = parse_event_kind(kind);
      std::vector<double> ks = ek == EventKind::nonneg ? std::vector<double>{0.0} : doubles(ctx.cfg, "k");
      for (double k : nonempty(ks, "k")) {
        json j = oracle_json(oracle::exact_event(spec, n, Event{ek, l, k}));
        j["kind"] = kind;
        j["n"] = n;
        j["k"] = k;
        j["direction"] = l.values();
        results.push_back(j);
      }
    }
  }
  const json doc = results.size() == 1 ? results[0] : results;
  ctx.out.write("oracle.json", doc.dump(2) + "\n");
}

std::string point_row(std::size_t n, const char* kind, const RatePoint& p) {
  return std::to_string(n) + "," + kind + "," + format_number(p.k) + "," + format_number(p.value) + "," +
         format_number(p.se) + "," + (p.censored ? "1" : "0") + "\n";
}

void task_diagnostics(Context& ctx) {
  require_samples(ctx.mc);
  const auto spec = discrete_spec(ctx.cfg);
  const auto ns = nonempty(sizes(ctx.cfg, "n"), "n");
  const Direction l(direction(ctx.cfg, spec.dimension));
  const auto ks = nonempty(doubles(ctx.cfg, "k"), "k");
  const double kprime = ctx.cfg.get_double("grid", "kprime", ks.front() / 2.0);
  auto report = lemma_diagnostics(spec, ctx.mc, ns, l, ks.front(), kprime);
  std::string s = "n,kind,k,value,se,censored\n";
  std::vector<RatePoint> all;
  for (const auto& r : report.rows) {
    s += point_row(r.n, "tail", r.tail) + point_row(r.n, "hit", r.hit) + point_row(r.n, "hit_noback", r.noback) +
         point_row(r.n, "hit_noback_kprime", r.noback_kprime);
    for (const auto* p : {&r.tail, &r.hit, &r.noback, &r.noback_kprime}) all.push_back(*p);
  }
  ctx.out.write("diagnostics.csv", s);
  if (ctx.cfg.has("grid", "m")) {
    const auto m = static_cast<std::size_t>(ctx.cfg.get_int("grid", "m"));
    // the hit/no-backtrack diagnostic uses k' < k; superadditivity needs k' > k
    const double ksuper = ctx.cfg.get_double("grid", "kprime_super", 1.25 * ks.front());
    auto sc = superadditivity_check(spec, ctx.mc, m, ns.front(), l, ks.front(), ksuper);
    std::string t = "m,n,r,k,kprime,lhs,first,second,log_c,margin,pooled_se,pass,censored\n";
    t += std::to_string(sc.m) + "," + std::to_string(sc.n) + "," + std::to_string(sc.r) + "," + format_number(sc.k) +
         "," + format_number(sc.kprime) + "," + format_number(sc.lhs.value) + "," + format_number(sc.first.value) +
         "," + format_number(sc.second.value) + "," + format_number(sc.log_c) + "," + format_number(sc.margin) + "," +
         format_number(sc.pooled_se) + "," + (sc.pass ? "1" : "0") + "," + (sc.censored ? "1" : "0") + "\n";
    ctx.out.write("superadditivity.csv", t);
  }
  ctx.censored_only = all_censored(all);
}

json lattice_json(const LatticeVector& v) { return std::vector<std::int64_t>(v.coords().begin(), v.coords().end()); }

void task_nice(Context& ctx) {
  const auto spec = spec_from_config(ctx.cfg);
  const auto vecs = spec.nice_vectors();
  json j;
  auto cert = nice::is_nice(vecs);
  j["nice"] = cert.nice;
  if (!cert.nice) {
    j["violating_direction"] = cert.violating_direction;
    ctx.out.write("nice.json", j.dump(2) + "\n");
    ctx.message = "vector set is not nice";
    throw ValidationError(ctx.message);
  }
  j["positive_combination"] = cert.positive_combination;
  nice::NiceSet set(vecs);
  auto loop = nice::find_zero_loop(set);
  j["zero_loop"] = loop.q;
  j["zero_loop_minimal"] = loop.minimal;
  auto hl = nice::halfspace_loop(set, Direction(direction(ctx.cfg, spec.dimension)), loop);
  json steps = json::array();
  for (const auto& s : hl.steps) steps.push_back(lattice_json(s));
  j["halfspace_loop"] = steps;
  j["rotation"] = hl.rotation;
  auto kappa = nice::rho_min(set);
  j["kappa"] = kappa.kappa;
  j["kappa_lower"] = kappa.kappa_lower;
  j["kappa_argmin"] = kappa.argmin;
  ctx.out.write("nice.json", j.dump(2) + "\n");
}

void task_trap(Context& ctx) {
  const std::size_t dim = static_cast<std::size_t>(ctx.cfg.get_int("field", "dimension", 2));
  const std::size_t starts = static_cast<std::size_t>(ctx.cfg.get_int("grid", "starts", 100));
  const double tmax = ctx.cfg.get_double("grid", "tmax", 1000.0);
  if (dim < 1 || dim > 4) throw ValidationError("trap: dimension must be in 1..4");
  if (!(tmax > 0.0)) throw ValidationError("trap: tmax must be positive");
  std::vector<std::uint8_t> inside(starts), rest(starts);
  std::vector<std::vector<double>> begin(starts);
  parallel_for(starts, ctx.mc.workers, [&](std::size_t i) {
    auto w = cont::trap_scenario(dim, sample_seed(ctx.mc.seed, i));
    auto t = cont::simulate(w, tmax, {.log_events = false});
    inside[i] = cont::stays_in_cube(t, LatticeVector(dim));
    rest[i] = t.trapped_at_rest;
    begin[i] = t.start;
  });
  std::string s = "run";
  for (std::size_t i = 0; i < dim; ++i) s += ",x" + std::to_string(i + 1);
  s += ",contained,at_rest\n";
  std::size_t held = 0;
  for (std::size_t i = 0; i < starts; ++i) {
    s += std::to_string(i);
    for (double x : begin[i]) s += "," + format_number(x);
    s += std::string(",") + (inside[i] ? "1" : "0") + "," + (rest[i] ? "1" : "0") + "\n";
    held += inside[i];
  }
  ctx.out.write("trap.csv", s);
  if (starts > 0) {
    auto t = cont::simulate(cont::trap_scenario(dim, sample_seed(ctx.mc.seed, 0)), tmax);
    ctx.out.write("trap_events.jsonl", cont::events_jsonl(t));
  }
  ctx.message = "contained " + std::to_string(held) + "/" + std::to_string(starts);
  if (held != starts) throw ValidationError("trap containment failed: " + ctx.message);
}

}  // namespace

std::string config_hash(const std::string& text) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash_label(text)));
  return buf;
}

RunResult run(const Config& cfg, const RunOptions& opt) {
  const auto started = std::chrono::steady_clock::now();
  RunResult res;
  try {
    const std::string model = cfg.get_string("run", "model", "discrete");
    const std::string task = cfg.get_string("run", "task");
    McOptions mc;
    mc.seed = static_cast<std::uint64_t>(cfg.get_int("run", "seed", 1));
    mc.samples = static_cast<std::size_t>(cfg.get_int("run", "samples", 10000));
    if (opt.workers) {
      mc.workers = *opt.workers;
    } else if (cfg.has("run", "workers")) {
      mc.workers = static_cast<unsigned>(std::max<std::int64_t>(1, cfg.get_int("run", "workers")));
    } else {
      mc.workers = default_workers();
    }
    const std::string output = opt.output ? *opt.output : cfg.get_string("run", "output", "dwre-out");
    if (model != "discrete" && model != "continuous") {
      throw ConfigError("model must be 'discrete' or 'continuous'", cfg.get("run", "model")->line);
    }

    using Task = std::function<void(Context&)>;
    const std::map<std::string, Task> discrete_tasks{
        {"rate", task_rate_discrete}, {"mgf", task_mgf},         {"conjugate", task_conjugate},
        {"lln", task_lln},            {"oracle", task_oracle},   {"diagnostics", task_diagnostics},
        {"nice", task_nice},          {"trap", task_trap}};
    const std::map<std::string, Task> continuous_tasks{{"rate", task_rate_continuous}, {"trap", task_trap}};
    const auto& table = model == "discrete" ? discrete_tasks : continuous_tasks;
    auto it = table.find(task);
    if (it == table.end()) {
      const auto line = cfg.get("run", "task")->line;
      if (discrete_tasks.count(task) || continuous_tasks.count(task)) {
        throw ValidationError("task '" + task + "' is not available for the " + model + " model (line " +
                              std::to_string(line) + ")");
      }
      throw ConfigError("unknown task '" + task + "'", line);
    }

    Writer out(output);
    Context ctx{cfg, mc, out, false, {}};
    it->second(ctx);

    json manifest;
    manifest["config_hash"] = config_hash(cfg.text());
    manifest["seed"] = mc.seed;
    manifest["version"] = DWRE_VERSION;
    manifest["model"] = model;
    manifest["task"] = task;
    manifest["samples"] = mc.samples;
    manifest["files"] = out.files();
    manifest["wall_time_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    out.write("manifest.json", manifest.dump(2) + "\n");

    res.files = out.files();
    res.message = ctx.message;
    if (ctx.censored_only) {
      res.exit_code = kCensoredOnly;
      res.message = "every estimate is censored (no successes)";
    }
  } catch (const ConfigError& e) {
    res.exit_code = kParseError;
    res.message = e.what();
  } catch (const ValidationError& e) {
    res.exit_code = kValidationError;
    res.message = e.what();
  } catch (const std::invalid_argument& e) {
    res.exit_code = kValidationError;
    res.message = e.what();
  } catch (const std::runtime_error& e) {
    res.exit_code = kValidationError;
    res.message = e.what();
  }
  return res;
}

RunResult run_file(const std::string& path, const RunOptions& opt) {
  try {
    return run(Config::load(path), opt);
  } catch (const ConfigError& e) {
    return RunResult{kParseError, e.what(), {}};
  }
}

}  // namespace dwre::cli
