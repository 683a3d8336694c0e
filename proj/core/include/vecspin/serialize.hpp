#pragma once

// JSON file formats: model, spin measure, path, matrices (row-major nested
// arrays), quadrature/optimizer blocks, and result payloads. String-based so
// the installable core does not leak its JSON dependency.

#include "vecspin/finiten.hpp"
#include "vecspin/model.hpp"
#include "vecspin/paths.hpp"
#include "vecspin/quadrature.hpp"
#include "vecspin/varforms.hpp"

#include <string>

namespace vecspin {

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

// {"D": int, "terms": [{"p": int, "beta": [real x D]}]}
MixtureModel model_from_json(const std::string& text);
std::string model_to_json(const MixtureModel& m);

// {"type": "ising"} | {"type": "potts", "D": int} | {"atoms": [{"tau": [...], "w": real}]}
SpinMeasure spin_measure_from_json(const std::string& text);
std::string spin_measure_to_json(const SpinMeasure& p1);

// {"grid": [reals], "values": [matrix...]} in canonical form
StepPath path_from_json(const std::string& text);
std::string path_to_json(const StepPath& pi);

// row-major nested arrays
SymMatrix sym_from_json(const std::string& text);
std::string sym_to_json(const SymMatrix& a);

QuadratureSpec quadrature_from_json(const std::string& text);
std::string quadrature_to_json(const QuadratureSpec& q);

OptimizerSpec optimizer_from_json(const std::string& text);
std::string optimizer_to_json(const OptimizerSpec& o);

std::string eval_result_to_json(const EvalResult& r);
std::string variational_result_to_json(const VariationalResult& r, bool with_trace = false);

}  // namespace vecspin
