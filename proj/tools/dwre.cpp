#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dwre/cli.hpp"
#include "dwre/environment.hpp"
#include "dwre/nice_set.hpp"
#include "dwre/oracle.hpp"
#include "dwre/parallel.hpp"
#include "dwre/rng.hpp"
#include "dwre/teleport.hpp"

using namespace dwre;
using json = nlohmann::ordered_json;

namespace {

// "1 0; -1 0; 0 1" or repeated --vector options
std::vector<LatticeVector> lattice_vectors(const std::vector<std::string>& items) {
  std::vector<LatticeVector> out;
  for (const auto& item : items) {
    for (const auto& part : split(item, ';')) {
      if (part.empty()) continue;
      std::vector<std::int64_t> c;
      for (const auto& tok : split_ws(part)) c.push_back(parse_int(tok));
      out.emplace_back(std::span<const std::int64_t>(c));
    }
  }
  if (out.empty()) throw std::invalid_argument("no vectors given");
  return out;
}

EnvironmentSpec load_spec(const std::string& config, const std::vector<std::string>& steps) {
  if (!config.empty()) return spec_from_config(Config::load(config));
  std::string text = "[environment]\n";
  std::size_t dim = 0;
  for (const auto& s : steps) {
    text += "step = " + s + "\n";
    dim = split_ws(split(s, ':').front()).size();
  }
  if (dim == 0) throw std::invalid_argument("give --config or at least one --step 'dx ... : p'");
  text += "dimension = " + std::to_string(dim) + "\n";
  return spec_from_config(Config::parse(text));
}

std::vector<double> unit(const std::vector<double>& l, std::size_t dim) {
  if (l.empty()) {
    std::vector<double> e(dim, 0.0);
    e[0] = 1.0;
    return e;
  }
  return Direction(l).values();
}

int print(const json& j, int code = 0) {
  std::cout << j.dump(2) << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deterministic walks in random environments: estimators, exact oracles and the continuous model"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "Execute a config file");
  std::string run_config;
  int run_workers = 0;
  std::string run_output;
  run->add_option("config", run_config, "INI config")->required();
  run->add_option("--workers", run_workers, "Worker threads (default: DWRE_WORKERS or hardware)");
  run->add_option("--output", run_output, "Output directory (overrides [run] output)");

  // nice
  auto* nice_cmd = app.add_subcommand("nice", "Nice-set utilities");
  nice_cmd->require_subcommand(1);
  std::vector<std::string> nice_vectors;
  std::vector<double> nice_direction;
  int resolution = nice::kDefaultKappaResolution;
  auto* nice_check = nice_cmd->add_subcommand("check", "Exact niceness test");
  auto* nice_loop = nice_cmd->add_subcommand("loop", "Zero loop and half-space loop");
  auto* nice_kappa = nice_cmd->add_subcommand("kappa", "Uniform ellipticity constant");
  for (auto* sub : {nice_check, nice_loop, nice_kappa}) {
    sub->add_option("--vectors,-v", nice_vectors, "Vectors, e.g. \"1 0; -1 0; 0 1; 0 -1\"")->required();
  }
  nice_loop->add_option("--direction,-l", nice_direction, "Half-space direction");
  nice_kappa->add_option("--resolution", resolution, "Sphere grid resolution (>= 1000)");

  // oracle
  auto* oracle_cmd = app.add_subcommand("oracle", "Exact enumeration for small n");
  oracle_cmd->require_subcommand(1);
  std::string oracle_config;
  std::vector<std::string> oracle_steps;
  std::size_t oracle_n = 3;
  std::vector<double> oracle_l, oracle_lambda;
  double oracle_k = 0.0, oracle_level = 0.0;
  std::string oracle_kind = "tail";
  bool oracle_noback = false;
  auto* o_event = oracle_cmd->add_subcommand("event", "P(event) for tail, hit, hit_noback, nonneg");
  auto* o_mgf = oracle_cmd->add_subcommand("mgf", "log E exp(lambda . X_n)");
  auto* o_hit = oracle_cmd->add_subcommand("hit", "P(T_level <= n [, T_level <= D_1])");
  for (auto* sub : {o_event, o_mgf, o_hit}) {
    sub->add_option("--config,-c", oracle_config, "Config with an [environment] section");
    sub->add_option("--step,-s", oracle_steps, "Step law entry 'dx ... : p' (repeatable)");
    sub->add_option("--n,-n", oracle_n, "Number of steps");
  }
  o_event->add_option("--kind", oracle_kind, "tail | hit | hit_noback | nonneg");
  o_event->add_option("--k,-k", oracle_k, "Speed k (level n k)");
  o_event->add_option("--direction,-l", oracle_l, "Direction l");
  o_mgf->add_option("--lambda", oracle_lambda, "lambda vector")->required();
  o_hit->add_option("--level", oracle_level, "Level")->required();
  o_hit->add_option("--direction,-l", oracle_l, "Direction l");
  o_hit->add_flag("--noback", oracle_noback, "Also require T_level <= D_1");

  // trap
  auto* trap = app.add_subcommand("trap", "Trap containment in the continuous model");
  std::size_t trap_d = 2, trap_starts = 100;
  double trap_tmax = 1000.0;
  std::uint64_t trap_seed = 1;
  std::string trap_events;
  trap->add_option("--d", trap_d, "Dimension (1..4)");
  trap->add_option("--tmax", trap_tmax, "Time horizon");
  trap->add_option("--starts", trap_starts, "Number of interior starts");
  trap->add_option("--seed", trap_seed, "Master seed");
  trap->add_option("--events", trap_events, "Write the JSONL event log of the first start here");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      cli::RunOptions opt;
      if (run_workers > 0) opt.workers = static_cast<unsigned>(run_workers);
      if (!run_output.empty()) opt.output = run_output;
      auto res = cli::run_file(run_config, opt);
      if (!res.message.empty()) (res.exit_code == 0 ? std::cout : std::cerr) << res.message << "\n";
      for (const auto& f : res.files) std::cout << "wrote " << f << "\n";
      return res.exit_code;
    }

    if (*nice_cmd) {
      const auto vecs = lattice_vectors(nice_vectors);
      if (*nice_check) {
        auto cert = nice::is_nice(vecs);
        json j;
        j["nice"] = cert.nice;
        if (cert.nice) {
          j["positive_combination"] = cert.positive_combination;
        } else {
          j["violating_direction"] = cert.violating_direction;
        }
        return print(j, cert.nice ? 0 : cli::kValidationError);
      }
      nice::NiceSet set(vecs);
      if (*nice_loop) {
        auto loop = nice::find_zero_loop(set);
        auto hl = nice::halfspace_loop(set, Direction(unit(nice_direction, set.dim())), loop);
        json steps = json::array();
        for (const auto& s : hl.steps) steps.push_back(std::vector<std::int64_t>(s.coords().begin(), s.coords().end()));
        json j;
        j["zero_loop"] = loop.q;
        j["minimal"] = loop.minimal;
        j["direction"] = hl.direction;
        j["halfspace_loop"] = steps;
        j["rotation"] = hl.rotation;
        j["problems"] = nice::verify_halfspace_loop(hl);
        return print(j);
      }
      auto k = nice::rho_min(set, resolution);
      json j;
      j["kappa"] = k.kappa;
      j["kappa_grid"] = k.kappa_grid;
      j["kappa_lower"] = k.kappa_lower;
      j["argmin"] = k.argmin;
      j["estimate_only"] = k.estimate_only;
      return print(j);
    }

    if (*oracle_cmd) {
      const auto spec = load_spec(oracle_config, oracle_steps);
      auto report = validate_spec(spec);
      if (!report.empty()) {
        std::cerr << format_violations(report);
        return cli::kValidationError;
      }
      oracle::Result r;
      json j;
      if (*o_event) {
        const Direction l(unit(oracle_l, spec.dimension));
        r = oracle::exact_event(spec, oracle_n, Event{parse_event_kind(oracle_kind), l, oracle_k});
        j["kind"] = oracle_kind;
        j["k"] = oracle_k;
      } else if (*o_mgf) {
        r = oracle::exact_mgf(spec, oracle_n, oracle_lambda);
        j["lambda"] = oracle_lambda;
      } else {
        const Direction l(unit(oracle_l, spec.dimension));
        r = oracle::exact_hitting(spec, oracle_n, l, oracle_level, oracle_noback);
        j["level"] = oracle_level;
        j["noback"] = oracle_noback;
      }
      j["n"] = oracle_n;
      j["value"] = r.value;
      j["abs_error_bound"] = r.abs_error_bound;
      j["branches"] = r.branches;
      return print(j);
    }

    if (*trap) {
      std::vector<std::uint8_t> held(trap_starts);
      parallel_for(trap_starts, default_workers(), [&](std::size_t i) {
        auto w = cont::trap_scenario(trap_d, sample_seed(trap_seed, i));
        held[i] = cont::stays_in_cube(cont::simulate(w, trap_tmax, {.log_events = false}), LatticeVector(trap_d));
      });
      std::size_t count = 0;
      for (auto h : held) count += h;
      if (!trap_events.empty() && trap_starts > 0) {
        auto t = cont::simulate(cont::trap_scenario(trap_d, sample_seed(trap_seed, 0)), trap_tmax);
        std::FILE* f = std::fopen(trap_events.c_str(), "wb");
        if (!f) throw std::runtime_error("cannot write " + trap_events);
        const auto text = cont::events_jsonl(t);
        std::fwrite(text.data(), 1, text.size(), f);
        std::fclose(f);
      }
      json j;
      j["dimension"] = trap_d;
      j["tmax"] = trap_tmax;
      j["starts"] = trap_starts;
      j["contained"] = count;
      return print(j, count == trap_starts ? 0 : cli::kValidationError);
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::kParseError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::kValidationError;
  }
  return 0;
}
