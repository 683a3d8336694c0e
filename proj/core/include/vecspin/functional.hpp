#pragma once

// Evaluation of the Parisi functional for step paths via the finite cascade
// recursion, the gradient in the external field, the Lipschitz-in-path
// bound, and a direct cascade-sampling oracle used for validation.

#include "vecspin/model.hpp"
#include "vecspin/paths.hpp"
#include "vecspin/quadrature.hpp"
#include "vecspin/symcone.hpp"

namespace vecspin {

/// The cascade log-moment
///   E log iint exp( w(alpha) . tau + field . tau tau^T ) dP1 dR
/// where w is the hierarchical Gaussian field of the path (covariance
/// grad_xi o pi at the overlap, overlap uniform on [0,1]). The recursion
/// attaches to each level the left grid point as its cascade parameter.
EvalResult rpc_log_moment(const MixtureModel& m, const SpinMeasure& p1, const StepPath& pi,
                          const SymMatrix& field, const QuadratureSpec& quad);

/// int_0^1 theta(pi(s)) ds, exact for step paths.
double theta_path_integral(const MixtureModel& m, const StepPath& pi);

/// Parisi functional P(pi, x): cascade log-moment at effective field
/// x - (1/2) grad_xi(endpoint) plus (1/2) int theta(pi(s)) ds.
EvalResult parisi_functional(const MixtureModel& m, const SpinMeasure& p1, const StepPath& pi,
                             const SymMatrix& x, const QuadratureSpec& quad);

struct GradientResult {
  SymMatrix grad;     // cascade-Gibbs average of tau tau^T
  EvalResult value;   // functional value from the same sweep
  GradientResult(SymMatrix g, EvalResult v) : grad(std::move(g)), value(std::move(v)) {}
};

/// grad_x P(pi, x) by tilted reweighting through the recursion; symmetric,
/// PSD within tolerance, norm <= 1.
GradientResult functional_gradient_x(const MixtureModel& m, const SpinMeasure& p1,
                                     const StepPath& pi, const SymMatrix& x,
                                     const QuadratureSpec& quad);

/// Central finite difference of parisi_functional in x with common random
/// numbers; the independent cross-check for the reweighting gradient.
SymMatrix functional_gradient_fd(const MixtureModel& m, const SpinMeasure& p1,
                                 const StepPath& pi, const SymMatrix& x,
                                 const QuadratureSpec& quad, double step = 1e-5);

/// (1/2) int ( |grad_xi o pi - grad_xi o pi2| + |theta o pi - theta o pi2| ) ds,
/// exact on the merged grid.
double lipschitz_path_bound(const MixtureModel& m, const StepPath& pi, const StepPath& pi2);

struct CascadeSpec {
  int top_k = 2000;      // Poisson-Dirichlet truncation per branching level
  long replicas = 10000;
  uint64_t seed = 1;
};

struct CascadeResult {
  EvalResult estimate;
  double tail_mass = 0.0;      // truncation diagnostic, mean relative tail weight
  bool truncation_flagged = false;  // tail_mass > 1e-3
};

/// Direct estimate of the functional by sampling a truncated Ruelle cascade:
/// at each level with parameter x in (0,1) the top-K points of a Poisson
/// process with intensity x t^{-x-1} dt, Gaussian increments per node.
/// Validation oracle for parisi_functional; requires few levels.
CascadeResult parisi_functional_cascade_oracle(const MixtureModel& m, const SpinMeasure& p1,
                                               const StepPath& pi, const SymMatrix& x,
                                               const CascadeSpec& spec);

}  // namespace vecspin
