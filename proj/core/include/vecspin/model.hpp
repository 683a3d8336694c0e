#pragma once

// Mixture function xi with gradient, theta, convex conjugate, hypothesis
// checks, and the single-spin measure with its feasible self-overlap hull.

#include "vecspin/symcone.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace vecspin {

struct MixtureTerm {
  int p = 1;                 // monomial degree, >= 1
  std::vector<double> beta;  // length D
};

/// xi(a) = sum_p sum_{kk'} beta_p(k) beta_p(k') a_{kk'}^p, the covariance
/// function of the mixed p-spin Hamiltonian with rank-one coefficient
/// matrices B_p = beta_p beta_p^T.
class MixtureModel {
 public:
  MixtureModel(int dim, std::vector<MixtureTerm> terms);

  int dim() const { return dim_; }
  const std::vector<MixtureTerm>& terms() const { return terms_; }
  bool empty() const { return terms_.empty(); }

  double xi(const SymMatrix& a) const;
  /// xi on general (possibly non-symmetric) matrices, e.g. cross-overlaps.
  double xi_dense(const Eigen::MatrixXd& a) const;
  SymMatrix grad_xi(const SymMatrix& a) const;
  /// theta(a) = a . grad_xi(a) - xi(a).
  double theta(const SymMatrix& a) const;

  /// Scalar component xi_{kk'}(t) = sum_p beta_p(k) beta_p(k') t^p.
  double xi_entry(int k, int kp, double t) const;
  /// Entrywise matrix theta_bold(a)_{kk'} = a_{kk'} xi'_{kk'}(a_{kk'}) - xi_{kk'}(a_{kk'}).
  SymMatrix theta_entrywise(const SymMatrix& a) const;

  /// True iff every beta_p is a constant vector (permutation symmetry of xi).
  bool symmetric() const;

 private:
  int dim_;
  std::vector<MixtureTerm> terms_;
};

struct XiStarSpec {
  int restarts = 4;
  int sweeps = 80;         // coordinate-ascent sweeps per start
  double norm_cap = 1e3;   // |z| beyond this reports divergence
  uint64_t seed = 1;
};

struct XiStarResult {
  double value = 0.0;
  SymMatrix maximizer;  // z achieving the supremum
  bool diverged = false;
  XiStarResult() : maximizer(1) {}
};

/// Convex conjugate over the cone: xi*(y) = sup_{z PSD} { z.y - xi(z) },
/// by coordinate ascent on a Cholesky-factor parametrization, multi-start.
XiStarResult xi_star(const MixtureModel& m, const SymMatrix& y, const XiStarSpec& spec = {});

struct HypothesisReport {
  bool nonneg_on_cone = true;      // xi >= 0 on random PSD
  bool monotone_xi = true;         // a >= b (PSD order) => xi(a) >= xi(b)
  bool monotone_grad = true;       // and grad_xi(a) >= grad_xi(b)
  bool midpoint_convex = true;     // xi((a+b)/2) <= (xi(a)+xi(b))/2
  bool has_odd_terms = false;      // odd p present (flagged, not failed)
  std::optional<std::pair<SymMatrix, SymMatrix>> counterexample;
  std::string detail;
  bool passed() const {
    return nonneg_on_cone && monotone_xi && monotone_grad && midpoint_convex;
  }
};

/// Monte-Carlo validation of (H2), (H3) and midpoint convexity on S^D_+.
HypothesisReport validate_hypotheses(const MixtureModel& m, int samples, uint64_t seed);

struct SpinAtom {
  Eigen::VectorXd tau;
  double weight = 0.0;
};

/// Finite atomic probability measure on the unit ball of R^D.
class SpinMeasure {
 public:
  SpinMeasure(int dim, std::vector<SpinAtom> atoms);

  /// D=1, atoms +1 and -1, weight 1/2 each.
  static SpinMeasure ising();
  /// Atoms e_1..e_D, weight 1/D each.
  static SpinMeasure potts(int dim);

  int dim() const { return dim_; }
  const std::vector<SpinAtom>& atoms() const { return atoms_; }
  int size() const { return static_cast<int>(atoms_.size()); }

 private:
  int dim_;
  std::vector<SpinAtom> atoms_;
};

/// The polytope D = conv{tau tau^T : tau in supp P1}, as a vertex list with a
/// quadratic-programming membership test over hull weights.
class OverlapHull {
 public:
  explicit OverlapHull(const SpinMeasure& p1);

  const std::vector<SymMatrix>& vertices() const { return vertices_; }
  /// Combination sum_i w_i vertex_i for simplex weights w.
  SymMatrix combine(std::span<const double> weights) const;
  /// Euclidean distance from x to the hull (0 for members).
  double distance(const SymMatrix& x) const;
  bool contains(const SymMatrix& x, double tol = 1e-7) const;

 private:
  std::vector<SymMatrix> vertices_;
};

}  // namespace vecspin
