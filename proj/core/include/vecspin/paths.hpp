#pragma once

// Discrete monotone PSD-valued paths on (0,1], the endpoint classes Pi(z),
// path distances, and the endpoint projection/lift constructions.

#include "vecspin/symcone.hpp"

#include <vector>

namespace vecspin {

/// Piecewise-constant, left-continuous increasing path pi: (0,1] -> S^D_+.
/// Canonical storage: breakpoints 0 = grid[0] < ... < grid[m] = 1 and values
/// value(j) on (grid[j], grid[j+1]], strictly increasing in the PSD order
/// (no zero-width interval, no repeated consecutive value). pi(0) = 0 by
/// convention; the functional never reads the path at s = 0.
class StepPath {
 public:
  /// Canonicalizes raw breakpoint/value sequences; throws on non-monotone
  /// input (grid or values) or malformed endpoints.
  StepPath(std::vector<double> grid, std::vector<PsdMatrix> values);

  /// Constant path equal to v on (0,1].
  static StepPath constant(PsdMatrix v);
  static StepPath zero(int dim);

  int dim() const { return values_[0].dim(); }
  /// Number of stored levels.
  int levels() const { return static_cast<int>(values_.size()); }
  const std::vector<double>& grid() const { return grid_; }
  const PsdMatrix& value(int j) const { return values_[j]; }
  const PsdMatrix& endpoint() const { return values_.back(); }
  double width(int j) const { return grid_[j + 1] - grid_[j]; }

  /// pi(s) for s in (0,1]; pi(0) = 0.
  const PsdMatrix& at(double s) const;

  /// |endpoint - z| <= tol, membership in Pi(z).
  bool in_endpoint_class(const PsdMatrix& z, double tol = 1e-10) const;

 private:
  StepPath() = default;

  std::vector<double> grid_;
  std::vector<PsdMatrix> values_;
  PsdMatrix zero_{PsdMatrix::zero(1)};
};

/// Re-canonicalizes (drops zero-width intervals, merges equal neighbours).
/// The path as a function on (0,1] is unchanged.
StepPath canonicalize(const StepPath& pi);

/// Exact value of the L1 path distance int_0^1 |pi(s) - pi2(s)| ds, computed
/// on the merged grid.
double path_distance(const StepPath& pi, const StepPath& pi2);

struct ProjectionResult {
  StepPath path;       // member of Pi(z)
  double distance;     // int |pi - pi'|
  double bound;        // k_bound(z, |w|), w = endpoint(pi) - z
  ProjectionResult(StepPath p, double d, double b)
      : path(std::move(p)), distance(d), bound(b) {}
};

/// Endpoint projection: given pi in Pi(z+w) with w = endpoint(pi) - z PSD,
/// produces pi' in Pi(z). Positive-definite z conjugates by
/// h = sqrt(z) (sqrt(z+w))^{-1}; singular z reduces to the positive
/// eigenblock, applies the block construction, and re-embeds with zero
/// padding; z = 0 yields the zero path.
ProjectionResult project_to_endpoint(const StepPath& pi, const PsdMatrix& z);

/// Appends a final level of width eps with value z+w (requires z+w >=
/// endpoint(pi) in the PSD order), moving the path into Pi(z+w).
StepPath lift_to_endpoint(const StepPath& pi, const PsdMatrix& z, const PsdMatrix& w,
                          double eps = 1e-3);

/// The dominating perturbation w = |z - z'| I used to compare endpoint
/// classes: z + w >= z' in the PSD order.
PsdMatrix dominating_shift(const PsdMatrix& z, const PsdMatrix& z_prime);

}  // namespace vecspin
