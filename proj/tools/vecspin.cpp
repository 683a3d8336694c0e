// vecspin: configuration-driven front end for evaluating and optimizing the
// vector spin glass variational formulas and running the finite-N simulator.
//
// Subcommands: validate, eval, solve, simulate. JSON config in, JSON/CSV out,
// manifest alongside every file output for exact replay.

#include <CLI11.hpp>
#include <json.hpp>

#include "vecspin/finiten.hpp"
#include "vecspin/functional.hpp"
#include "vecspin/model.hpp"
#include "vecspin/serialize.hpp"
#include "vecspin/varforms.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

using nlohmann::json;
using namespace vecspin;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitDomain = 2;
constexpr int kExitConvergence = 3;

struct CommonArgs {
  std::string config_path;
  std::string output;
  std::string format = "json";
  std::optional<uint64_t> seed;
  int jobs = 1;
  bool trace = false;
  bool oracle = false;
};

json load_config(const CommonArgs& args) {
  json cfg = json::parse(read_text_file(args.config_path));
  if (!cfg.is_object()) throw std::invalid_argument("config: top level must be an object");
  if (args.seed) cfg["seed"] = *args.seed;
  if (!cfg.contains("seed")) cfg["seed"] = 1;
  return cfg;
}

// inline object or file reference
json resolve_ref(const json& cfg, const std::string& key) {
  if (!cfg.contains(key)) throw std::invalid_argument("config: missing \"" + key + "\"");
  const json& v = cfg.at(key);
  if (v.is_string()) return json::parse(read_text_file(v.get<std::string>()));
  return v;
}

MixtureModel resolve_model(const json& cfg) {
  return model_from_json(resolve_ref(cfg, "model").dump());
}

SpinMeasure resolve_measure(const json& cfg) {
  return spin_measure_from_json(resolve_ref(cfg, "spin_measure").dump());
}

SymMatrix resolve_x(const json& cfg, int dim) {
  if (!cfg.contains("x")) return SymMatrix(dim);
  return sym_from_json(cfg.at("x").dump());
}

// fully resolved blocks with per-block seeds derived from the global one
json resolve_config(const json& cfg, const MixtureModel& m) {
  json out = cfg;
  const uint64_t seed = cfg.at("seed").get<uint64_t>();
  out["model"] = json::parse(model_to_json(m));
  if (cfg.contains("spin_measure") && cfg.at("spin_measure").is_string())
    out["spin_measure"] = json::parse(read_text_file(cfg.at("spin_measure").get<std::string>()));

  QuadratureSpec quad;
  if (cfg.contains("quadrature")) quad = quadrature_from_json(cfg.at("quadrature").dump());
  if (!cfg.contains("quadrature") || !cfg.at("quadrature").contains("seed"))
    quad.seed = derive_seed(seed, 1);
  out["quadrature"] = json::parse(quadrature_to_json(quad));

  OptimizerSpec opt;
  if (cfg.contains("optimizer")) opt = optimizer_from_json(cfg.at("optimizer").dump());
  if (!cfg.contains("optimizer") || !cfg.at("optimizer").contains("seed"))
    opt.seed = derive_seed(seed, 2);
  opt.quad = quad;
  out["optimizer"] = json::parse(optimizer_to_json(opt));

  if (cfg.contains("simulation")) {
    json sim = cfg.at("simulation");
    if (!sim.contains("seed")) sim["seed"] = derive_seed(seed, 3);
    out["simulation"] = sim;
  }
  return out;
}

QuadratureSpec quad_of(const json& resolved) {
  return quadrature_from_json(resolved.at("quadrature").dump());
}

OptimizerSpec optimizer_of(const json& resolved) {
  OptimizerSpec o = optimizer_from_json(resolved.at("optimizer").dump());
  o.quad = quad_of(resolved);
  return o;
}

void emit(const CommonArgs& args, const json& resolved, const std::string& body) {
  if (args.output.empty()) {
    std::cout << body << "\n";
    return;
  }
  write_text_file(args.output, body + "\n");
  write_text_file(args.output + ".manifest.json", resolved.dump(2) + "\n");
}

std::string csv_escape_free(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

int run_validate(const CommonArgs& args) {
  const json cfg = load_config(args);
  const MixtureModel m = resolve_model(cfg);
  const json resolved = resolve_config(cfg, m);
  const int samples = cfg.value("validation_samples", 400);
  const uint64_t seed = derive_seed(cfg.at("seed").get<uint64_t>(), 4);

  const HypothesisReport rep = validate_hypotheses(m, samples, seed);
  json out;
  out["passed"] = rep.passed();
  out["nonneg_on_cone"] = rep.nonneg_on_cone;
  out["monotone_xi"] = rep.monotone_xi;
  out["monotone_grad"] = rep.monotone_grad;
  out["midpoint_convex"] = rep.midpoint_convex;
  out["has_odd_terms"] = rep.has_odd_terms;
  out["symmetric_mixture"] = m.symmetric();
  if (!rep.detail.empty()) out["detail"] = rep.detail;
  if (rep.counterexample) {
    out["counterexample_a"] = json::parse(sym_to_json(rep.counterexample->first));
    out["counterexample_b"] = json::parse(sym_to_json(rep.counterexample->second));
  }
  emit(args, resolved, out.dump(2));
  return rep.passed() ? kExitOk : kExitDomain;
}

int run_eval(const CommonArgs& args) {
  const json cfg = load_config(args);
  const MixtureModel m = resolve_model(cfg);
  const SpinMeasure p1 = resolve_measure(cfg);
  const json resolved = resolve_config(cfg, m);
  const QuadratureSpec quad = quad_of(resolved);
  const SymMatrix x = resolve_x(cfg, m.dim());

  const StepPath pi = path_from_json(resolve_ref(cfg, "path").dump());
  const EvalResult r = parisi_functional(m, p1, pi, x, quad);

  json out = json::parse(eval_result_to_json(r));
  out["level_increment_norms"] = r.level_increment_norms;
  if (args.oracle) {
    CascadeSpec cspec;
    if (cfg.contains("cascade")) {
      cspec.top_k = cfg.at("cascade").value("top_k", cspec.top_k);
      cspec.replicas = cfg.at("cascade").value("replicas", cspec.replicas);
    }
    cspec.seed = derive_seed(cfg.at("seed").get<uint64_t>(), 5);
    const CascadeResult oracle = parisi_functional_cascade_oracle(m, p1, pi, x, cspec);
    out["oracle"] = {{"value", oracle.estimate.value},
                     {"std_error", oracle.estimate.std_error},
                     {"tail_mass", oracle.tail_mass},
                     {"truncation_flagged", oracle.truncation_flagged}};
    out["oracle_sigma_gap"] =
        std::abs(oracle.estimate.value - r.value) /
        std::max(1e-300, std::hypot(oracle.estimate.std_error, r.std_error));
  }
  emit(args, resolved, out.dump(2));
  return kExitOk;
}

int run_solve(const CommonArgs& args) {
  const json cfg = load_config(args);
  const MixtureModel m = resolve_model(cfg);
  const SpinMeasure p1 = resolve_measure(cfg);
  const json resolved = resolve_config(cfg, m);
  const OptimizerSpec opt = optimizer_of(resolved);
  const SymMatrix x = resolve_x(cfg, m.dim());
  const std::string objective = cfg.value("objective", "parisi");

  json out;
  bool converged = true;

  auto pack = [&](const VariationalResult& r) {
    out = json::parse(variational_result_to_json(r, args.trace));
    converged = r.converged;
  };

  if (objective == "parisi") {
    pack(parisi_value(m, p1, x, opt));
  } else if (objective == "parisi-constrained") {
    if (!cfg.contains("z")) throw std::invalid_argument("config: parisi-constrained needs \"z\"");
    const PsdMatrix z{sym_from_json(cfg.at("z").dump())};
    pack(parisi_value_constrained(m, p1, x, z, opt));
  } else if (objective == "grad") {
    const GradParisiResult g = grad_parisi(m, p1, x, opt);
    out["grad"] = json::parse(sym_to_json(g.grad));
    out["value"] = g.at_x.value;
    out["fd_consistent"] = g.fd_consistent;
    out["fd_max_dev"] = g.fd_max_dev;
    converged = g.at_x.converged && g.fd_consistent;
  } else if (objective == "pan") {
    pack(free_energy_pan(m, p1, opt));
  } else if (objective == "hj") {
    pack(free_energy_hj(m, p1, opt));
  } else if (objective == "xistar") {
    pack(free_energy_xistar(m, p1, opt));
  } else if (objective == "hopf") {
    const double t = cfg.value("t", 0.5);
    pack(hopf_value(m, p1, t, x, opt));
  } else if (objective == "equivalence") {
    const EquivalenceReport rep = check_equivalence(m, p1, opt);
    out["pan"] = rep.pan;
    out["hj"] = rep.hj;
    out["xistar"] = rep.xistar;
    out["hopf_half"] = rep.hopf_half;
    out["pan_hj"] = rep.pan_hj;
    out["pan_xistar"] = rep.pan_xistar;
    out["hj_xistar"] = rep.hj_xistar;
    out["hopf_matches_hj"] = rep.hopf_matches_hj;
    json rows = json::array();
    for (const auto& row : rep.endpoint_identity)
      rows.push_back({{"z", json::parse(sym_to_json(row.z))},
                      {"unrestricted", row.unrestricted},
                      {"pinned", row.pinned},
                      {"both_diverged", row.both_diverged},
                      {"pass", row.pass}});
    out["endpoint_identity"] = rows;
    out["all_pass"] = rep.all_pass;
    converged = rep.all_pass;
  } else {
    throw std::invalid_argument("config: unknown objective " + objective);
  }

  emit(args, resolved, out.dump(2));
  return converged ? kExitOk : kExitConvergence;
}

int run_simulate(const CommonArgs& args) {
  const json cfg = load_config(args);
  const MixtureModel m = resolve_model(cfg);
  const SpinMeasure p1 = resolve_measure(cfg);
  const json resolved = resolve_config(cfg, m);
  const json sim = resolved.value("simulation", json::object());

  GibbsSpec spec;
  const std::string mode = sim.value("mode", "enumerate");
  if (mode == "enumerate")
    spec.mode = GibbsMode::enumerate_all;
  else if (mode == "metropolis")
    spec.mode = GibbsMode::metropolis;
  else
    throw std::invalid_argument("simulation: unknown mode " + mode);
  spec.correction = sim.value("correction", true);
  spec.sweeps = sim.value("sweeps", spec.sweeps);
  spec.burn_in = sim.value("burn_in", spec.burn_in);
  spec.seed = sim.value("seed", uint64_t{1});
  if (cfg.contains("x")) spec.x = resolve_x(cfg, m.dim());

  std::vector<int> n_list;
  if (sim.contains("N_list"))
    n_list = sim.at("N_list").get<std::vector<int>>();
  else
    n_list.push_back(sim.value("N", 6));
  const int n_disorder = sim.value("n_disorder", 200);

  std::vector<std::string> observables =
      sim.value("observables", std::vector<std::string>{"self-overlap", "concentration"});

  // rows: N, observable, component, value, std_error
  std::vector<std::tuple<int, std::string, std::string, double, double>> rows;
  for (int n : n_list) {
    GibbsSpec s = spec;
    s.n = n;
    for (const auto& obs : observables) {
      if (obs == "free-energy") {
        const EvalResult fe = free_energy_finite(m, p1, s, n_disorder);
        rows.emplace_back(n, obs, "", fe.value, fe.std_error);
      } else if (obs == "self-overlap" || obs == "concentration") {
        const SelfOverlapStats st = self_overlap_stats(m, p1, s, n_disorder);
        if (obs == "self-overlap") {
          for (int i = 0; i < m.dim(); ++i)
            for (int j = i; j < m.dim(); ++j)
              rows.emplace_back(n, obs, std::to_string(i) + std::to_string(j), st.mean(i, j),
                                st.mean_se(i, j));
        } else {
          rows.emplace_back(n, obs, "", st.concentration, st.concentration_se);
        }
      } else {
        throw std::invalid_argument("simulation: unknown observable " + obs);
      }
    }
  }

  if (args.format == "csv") {
    std::ostringstream csv;
    csv << "N,observable,component,value,std_error\n";
    for (const auto& [n, obs, comp, v, se] : rows)
      csv << n << "," << obs << "," << comp << "," << csv_escape_free(v) << ","
          << csv_escape_free(se) << "\n";
    emit(args, resolved, csv.str());
  } else {
    json out = json::array();
    for (const auto& [n, obs, comp, v, se] : rows)
      out.push_back({{"N", n},
                     {"observable", obs},
                     {"component", comp},
                     {"value", v},
                     {"std_error", se}});
    emit(args, resolved, out.dump(2));
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vector spin glass variational formulas and finite-N simulator"};
  app.require_subcommand(1);

  CommonArgs args;
  uint64_t seed_arg = 0;
  bool seed_set = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", args.config_path, "JSON config file")->required();
    sub->add_option("--output", args.output, "output file (manifest written alongside)");
    sub->add_option("--format", args.format, "json | csv")
        ->check(CLI::IsMember({"json", "csv"}));
    sub->add_option("--seed", seed_arg, "override the config seed")
        ->each([&](const std::string&) { seed_set = true; });
    sub->add_option("--jobs", args.jobs, "worker cap (evaluations are deterministic)");
    sub->add_flag("--trace", args.trace, "include optimizer traces in solve output");
    sub->add_flag("--oracle", args.oracle, "add the cascade-oracle comparison to eval");
  };

  CLI::App* validate = app.add_subcommand("validate", "check model hypotheses");
  CLI::App* eval = app.add_subcommand("eval", "evaluate the functional on a path");
  CLI::App* solve = app.add_subcommand("solve", "run a variational objective");
  CLI::App* simulate = app.add_subcommand("simulate", "finite-N Gibbs simulation");
  for (CLI::App* sub : {validate, eval, solve, simulate}) add_common(sub);

  CLI11_PARSE(app, argc, argv);
  if (seed_set) args.seed = seed_arg;

  try {
    if (validate->parsed()) return run_validate(args);
    if (eval->parsed()) return run_eval(args);
    if (solve->parsed()) return run_solve(args);
    if (simulate->parsed()) return run_simulate(args);
  } catch (const std::domain_error& e) {
    std::cerr << "domain error: " << e.what() << "\n";
    return kExitDomain;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitConfig;
}
