#include "vecspin/serialize.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace vecspin {

using nlohmann::json;

namespace {

json parse(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("json parse error: ") + e.what());
  }
}

json matrix_json(const SymMatrix& a) {
  json rows = json::array();
  for (int i = 0; i < a.dim(); ++i) {
    json row = json::array();
    for (int j = 0; j < a.dim(); ++j) row.push_back(a(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

SymMatrix matrix_from(const json& j) {
  if (!j.is_array() || j.empty())
    throw std::invalid_argument("matrix: expected nested arrays");
  const int d = static_cast<int>(j.size());
  Eigen::MatrixXd m(d, d);
  for (int i = 0; i < d; ++i) {
    if (!j[i].is_array() || static_cast<int>(j[i].size()) != d)
      throw std::invalid_argument("matrix: rows must have length D");
    for (int k = 0; k < d; ++k) m(i, k) = j[i][k].get<double>();
  }
  return SymMatrix::from_dense(m);
}

}  // namespace

std::string read_text_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write file: " + path);
  out << text;
}

MixtureModel model_from_json(const std::string& text) {
  const json j = parse(text);
  if (!j.contains("D")) throw std::invalid_argument("model: missing \"D\"");
  if (!j.contains("terms")) throw std::invalid_argument("model: missing \"terms\"");
  const int d = j.at("D").get<int>();
  std::vector<MixtureTerm> terms;
  for (const auto& t : j.at("terms")) {
    MixtureTerm term;
    term.p = t.at("p").get<int>();
    term.beta = t.at("beta").get<std::vector<double>>();
    terms.push_back(std::move(term));
  }
  return MixtureModel(d, std::move(terms));
}

std::string model_to_json(const MixtureModel& m) {
  json j;
  j["D"] = m.dim();
  j["terms"] = json::array();
  for (const auto& t : m.terms()) j["terms"].push_back({{"p", t.p}, {"beta", t.beta}});
  return j.dump(2);
}

SpinMeasure spin_measure_from_json(const std::string& text) {
  const json j = parse(text);
  if (j.contains("type")) {
    const std::string type = j.at("type").get<std::string>();
    if (type == "ising") return SpinMeasure::ising();
    if (type == "potts") {
      if (!j.contains("D")) throw std::invalid_argument("spin measure: potts requires \"D\"");
      return SpinMeasure::potts(j.at("D").get<int>());
    }
    throw std::invalid_argument("spin measure: unknown type " + type);
  }
  if (!j.contains("atoms")) throw std::invalid_argument("spin measure: missing \"atoms\"");
  std::vector<SpinAtom> atoms;
  int d = -1;
  for (const auto& a : j.at("atoms")) {
    const auto tau = a.at("tau").get<std::vector<double>>();
    if (d < 0) d = static_cast<int>(tau.size());
    SpinAtom atom;
    atom.tau = Eigen::Map<const Eigen::VectorXd>(tau.data(), tau.size());
    atom.weight = a.at("w").get<double>();
    atoms.push_back(std::move(atom));
  }
  return SpinMeasure(d, std::move(atoms));
}

std::string spin_measure_to_json(const SpinMeasure& p1) {
  json j;
  j["atoms"] = json::array();
  for (const auto& a : p1.atoms()) {
    std::vector<double> tau(a.tau.data(), a.tau.data() + a.tau.size());
    j["atoms"].push_back({{"tau", tau}, {"w", a.weight}});
  }
  return j.dump(2);
}

StepPath path_from_json(const std::string& text) {
  const json j = parse(text);
  if (!j.contains("grid") || !j.contains("values"))
    throw std::invalid_argument("path: requires \"grid\" and \"values\"");
  const auto grid = j.at("grid").get<std::vector<double>>();
  std::vector<PsdMatrix> values;
  for (const auto& v : j.at("values")) values.emplace_back(matrix_from(v));
  return StepPath(grid, std::move(values));
}

std::string path_to_json(const StepPath& pi) {
  json j;
  j["grid"] = pi.grid();
  j["values"] = json::array();
  for (int k = 0; k < pi.levels(); ++k) j["values"].push_back(matrix_json(pi.value(k).sym()));
  return j.dump(2);
}

SymMatrix sym_from_json(const std::string& text) { return matrix_from(parse(text)); }

std::string sym_to_json(const SymMatrix& a) { return matrix_json(a).dump(2); }

QuadratureSpec quadrature_from_json(const std::string& text) {
  const json j = parse(text);
  QuadratureSpec q;
  if (j.contains("mode")) {
    const std::string mode = j.at("mode").get<std::string>();
    if (mode == "gauss-hermite")
      q.mode = QuadMode::gauss_hermite;
    else if (mode == "monte-carlo")
      q.mode = QuadMode::monte_carlo;
    else
      throw std::invalid_argument("quadrature: unknown mode " + mode);
  }
  q.gh_nodes = j.value("gh_nodes", q.gh_nodes);
  q.mc_samples = j.value("mc_samples", q.mc_samples);
  q.seed = j.value("seed", q.seed);
  q.antithetic = j.value("antithetic", q.antithetic);
  return q;
}

std::string quadrature_to_json(const QuadratureSpec& q) {
  json j;
  j["mode"] = q.mode == QuadMode::gauss_hermite ? "gauss-hermite" : "monte-carlo";
  j["gh_nodes"] = q.gh_nodes;
  j["mc_samples"] = q.mc_samples;
  j["seed"] = q.seed;
  j["antithetic"] = q.antithetic;
  return j.dump(2);
}

OptimizerSpec optimizer_from_json(const std::string& text) {
  const json j = parse(text);
  OptimizerSpec o;
  o.levels = j.value("levels", o.levels);
  if (j.contains("grid_mode")) {
    const std::string g = j.at("grid_mode").get<std::string>();
    if (g == "fixed-uniform")
      o.grid_mode = GridMode::fixed_uniform;
    else if (g == "free")
      o.grid_mode = GridMode::free;
    else
      throw std::invalid_argument("optimizer: unknown grid_mode " + g);
  }
  o.restarts = j.value("restarts", o.restarts);
  o.max_evals = j.value("max_evals", o.max_evals);
  o.tol_value = j.value("tol_value", o.tol_value);
  o.seed = j.value("seed", o.seed);
  o.norm_cap = j.value("norm_cap", o.norm_cap);
  o.outer_restarts = j.value("outer_restarts", o.outer_restarts);
  o.outer_max_evals = j.value("outer_max_evals", o.outer_max_evals);
  o.cross_check_gradient = j.value("cross_check_gradient", o.cross_check_gradient);
  if (j.contains("quadrature")) o.quad = quadrature_from_json(j.at("quadrature").dump());
  return o;
}

std::string optimizer_to_json(const OptimizerSpec& o) {
  json j;
  j["levels"] = o.levels;
  j["grid_mode"] = o.grid_mode == GridMode::fixed_uniform ? "fixed-uniform" : "free";
  j["restarts"] = o.restarts;
  j["max_evals"] = o.max_evals;
  j["tol_value"] = o.tol_value;
  j["seed"] = o.seed;
  j["norm_cap"] = o.norm_cap;
  j["outer_restarts"] = o.outer_restarts;
  j["outer_max_evals"] = o.outer_max_evals;
  j["cross_check_gradient"] = o.cross_check_gradient;
  j["quadrature"] = json::parse(quadrature_to_json(o.quad));
  return j.dump(2);
}

std::string eval_result_to_json(const EvalResult& r) {
  json j;
  j["value"] = r.value;
  j["std_error"] = r.std_error;
  return j.dump(2);
}

std::string variational_result_to_json(const VariationalResult& r, bool with_trace) {
  json j;
  j["value"] = r.value;
  j["std_error"] = r.std_error;
  j["converged"] = r.converged;
  j["diverged"] = r.diverged;
  j["evals"] = r.evals;
  if (!r.message.empty()) j["message"] = r.message;
  j["path"] = json::parse(path_to_json(r.path));
  if (r.y_opt) j["y"] = matrix_json(*r.y_opt);
  if (r.z_opt) j["z"] = matrix_json(*r.z_opt);
  if (with_trace) {
    json tr = json::array();
    for (const auto& [e, v] : r.trace) tr.push_back({{"evals", e}, {"best", v}});
    j["trace"] = tr;
  }
  return j.dump(2);
}

}  // namespace vecspin
