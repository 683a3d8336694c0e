#pragma once

// The variational layer: infimum of the Parisi functional over path classes,
// its numerical gradient, the two sup-inf free-energy formulas, the
// conjugate-simplified form, the Hopf formula, and the equivalence harness.

#include "vecspin/functional.hpp"
#include "vecspin/model.hpp"
#include "vecspin/paths.hpp"
#include "vecspin/quadrature.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace vecspin {

enum class GridMode { fixed_uniform, free };

struct OptimizerSpec {
  int levels = 3;                      // r, step-path levels
  GridMode grid_mode = GridMode::free;
  int restarts = 8;                    // multi-start count for path/inner solves
  long max_evals = 3000;               // simplex budget per start
  double tol_value = 1e-3;
  uint64_t seed = 7;
  QuadratureSpec quad;                 // CRN evaluation spec
  double norm_cap = 10.0;              // cap on |y| and |z| in the sup-inf forms
  int outer_restarts = 3;
  long outer_max_evals = 120;          // simplex budget per outer start
  bool cross_check_gradient = true;    // finite-difference check in grad_parisi
};

struct VariationalResult {
  double value = 0.0;
  StepPath path;                        // optimizing path
  std::optional<SymMatrix> y_opt;       // optimizing field, where applicable
  std::optional<SymMatrix> z_opt;       // optimizing endpoint / conjugate point
  double std_error = 0.0;
  bool converged = true;
  bool diverged = false;                // inner infimum identified as -infinity
  long evals = 0;
  std::string message;
  std::vector<std::pair<long, double>> trace;  // (evals, best value) milestones

  explicit VariationalResult(int dim) : path(StepPath::zero(dim)) {}
};

/// P(x) = inf over r-level step paths of P(pi, x).
VariationalResult parisi_value(const MixtureModel& m, const SpinMeasure& p1, const SymMatrix& x,
                               const OptimizerSpec& spec);

/// inf over Pi(z): paths pinned to endpoint z via normalized cumulative
/// PSD increments conjugated by sqrt(z) (positive-block reduction for
/// singular z; the zero path for z = 0).
VariationalResult parisi_value_constrained(const MixtureModel& m, const SpinMeasure& p1,
                                           const SymMatrix& x, const PsdMatrix& z,
                                           const OptimizerSpec& spec);

struct GradParisiResult {
  SymMatrix grad;              // envelope gradient at the optimizing path
  VariationalResult at_x;      // the optimization run behind it
  bool fd_consistent = true;   // finite differences agree within 5 tol
  double fd_max_dev = 0.0;
  GradParisiResult(SymMatrix g, VariationalResult r) : grad(std::move(g)), at_x(std::move(r)) {}
};

/// grad P(x) by the envelope rule: optimize once, then take the cascade-Gibbs
/// average of tau tau^T at the optimizing path.
GradParisiResult grad_parisi(const MixtureModel& m, const SpinMeasure& p1, const SymMatrix& x,
                             const OptimizerSpec& spec);

/// sup over z in the overlap hull of inf over (y in S^D, pi in Pi(z)) of
/// P(pi,y) - y.z + xi(z)/2.
VariationalResult free_energy_pan(const MixtureModel& m, const SpinMeasure& p1,
                                  const OptimizerSpec& spec);

/// sup over PSD z (norm-capped) of inf over (PSD y, pi in Pi) of the same
/// objective.
VariationalResult free_energy_hj(const MixtureModel& m, const SpinMeasure& p1,
                                 const OptimizerSpec& spec);

/// sup over PSD y of inf over Pi of P(pi,y) - xi*(2y)/2.
VariationalResult free_energy_xistar(const MixtureModel& m, const SpinMeasure& p1,
                                     const OptimizerSpec& spec);

/// Hopf formula f(t,x) = sup_z inf_y { P(y) + z.(x-y) + t xi(z) } over
/// norm-capped symmetric ranges; f(1/2, 0) is the standard free energy.
VariationalResult hopf_value(const MixtureModel& m, const SpinMeasure& p1, double t,
                             const SymMatrix& x, const OptimizerSpec& spec);

/// Two-route translation check of the generalized Parisi functional: the
/// original ingredients (cascade log-partition, entrywise theta sums) versus
/// the self-overlap-corrected functional. Returns (lhs, rhs); they agree to
/// quadrature accuracy when endpoint(pi) = z.
std::pair<double, double> translate_panchenko(const MixtureModel& m, const SpinMeasure& p1,
                                              const SymMatrix& lambda, const PsdMatrix& z,
                                              const StepPath& pi, const QuadratureSpec& quad);

struct EquivalenceRow {
  SymMatrix z;
  double unrestricted;   // inf over (y, Pi) of P(pi,y) - y.z
  double pinned;         // inf over (y, Pi(z)) of the same
  bool both_diverged = false;
  bool pass = false;
  EquivalenceRow(SymMatrix zz) : z(std::move(zz)), unrestricted(0), pinned(0) {}
};

struct EquivalenceReport {
  double pan = 0.0, hj = 0.0, xistar = 0.0, hopf_half = 0.0;
  bool pan_hj = false, pan_xistar = false, hj_xistar = false, hopf_matches_hj = false;
  std::vector<EquivalenceRow> endpoint_identity;
  bool all_pass = false;
};

/// Runs all three free-energy forms, the Hopf value at (1/2, 0), and the
/// pinned-endpoint identity on sampled hull points; passes at 2 tol_value.
EquivalenceReport check_equivalence(const MixtureModel& m, const SpinMeasure& p1,
                                    const OptimizerSpec& spec);

}  // namespace vecspin
