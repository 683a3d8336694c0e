#pragma once

// Symmetric-matrix and PSD-cone primitives. Matrices are dense and tiny
// (D is a handful at most); everything funnels through one symmetric
// eigendecomposition so a single tolerance regime applies.

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace vecspin {

// Absolute eigenvalue tolerance; scaled by (1 + |a|) where a norm is at hand.
inline constexpr double kPsdTol = 1e-10;

/// Symmetric D x D real matrix with entrywise inner product.
/// Storage is the upper triangle, so entries(i,j) == entries(j,i) exactly.
class SymMatrix {
 public:
  explicit SymMatrix(int dim);
  SymMatrix(int dim, std::vector<double> upper_row_major);

  static SymMatrix identity(int dim);
  static SymMatrix diag(std::span<const double> d);
  /// tau tau^T for a vector tau.
  static SymMatrix outer(const Eigen::VectorXd& tau);
  /// Symmetrizes (a + a^T)/2; rejects inputs farther than sym_tol from symmetric.
  static SymMatrix from_dense(const Eigen::MatrixXd& a, double sym_tol = 1e-9);

  int dim() const { return dim_; }
  double operator()(int i, int j) const { return upper_[index(i, j)]; }
  void set(int i, int j, double v) { upper_[index(i, j)] = v; }

  /// Entrywise inner product: sum over all D^2 entry products.
  double dot(const SymMatrix& b) const;
  double norm() const;
  double trace() const;

  Eigen::MatrixXd dense() const;
  const std::vector<double>& upper() const { return upper_; }

  SymMatrix& operator+=(const SymMatrix& b);
  SymMatrix& operator-=(const SymMatrix& b);
  SymMatrix& operator*=(double c);
  friend SymMatrix operator+(SymMatrix a, const SymMatrix& b) { return a += b; }
  friend SymMatrix operator-(SymMatrix a, const SymMatrix& b) { return a -= b; }
  friend SymMatrix operator*(double c, SymMatrix a) { return a *= c; }
  friend SymMatrix operator*(SymMatrix a, double c) { return a *= c; }
  SymMatrix operator-() const;

 private:
  std::size_t index(int i, int j) const;

  int dim_;
  std::vector<double> upper_;  // row-major upper triangle, size D(D+1)/2
};

/// Positive semi-definite matrix with a cached eigendecomposition.
/// Construction rejects eigenvalues below -kPsdTol*(1+|a|) and clips the
/// remaining negative ones to zero in the cache.
class PsdMatrix {
 public:
  explicit PsdMatrix(SymMatrix a);

  static PsdMatrix zero(int dim);
  static PsdMatrix identity(int dim);
  static PsdMatrix diag(std::span<const double> d);
  static PsdMatrix outer(const Eigen::VectorXd& tau);

  int dim() const { return sym_.dim(); }
  const SymMatrix& sym() const { return sym_; }
  double operator()(int i, int j) const { return sym_(i, j); }
  double norm() const { return sym_.norm(); }
  double trace() const { return sym_.trace(); }
  Eigen::MatrixXd dense() const { return sym_.dense(); }

  /// Eigenvalues in descending order, negatives clipped to 0.
  const std::vector<double>& eigenvalues() const { return eig_; }
  /// Columns are eigenvectors matching eigenvalues() order.
  const Eigen::MatrixXd& eigenvectors() const { return vec_; }

 private:
  PsdMatrix() : sym_(1) {}

  SymMatrix sym_;
  std::vector<double> eig_;
  Eigen::MatrixXd vec_;
};

/// a >= b in the Loewner (PSD) order: all eigenvalues of a-b above -tolerance.
bool psd_order(const SymMatrix& a, const SymMatrix& b);
bool psd_order(const PsdMatrix& a, const PsdMatrix& b);

/// Matrix square root; |r*r - a| <= 1e-9 (1+|a|) and |r| = sqrt(tr a).
PsdMatrix sqrt_psd(const PsdMatrix& a);

/// Smallest eigenvalue strictly above kPsdTol; throws on the zero matrix.
double min_positive_eig(const PsdMatrix& a);

/// Inverse of a positive-definite matrix (all eigenvalues above kPsdTol).
SymMatrix inverse_pd(const PsdMatrix& a);

/// h a h^T as a symmetric matrix, for a general (not necessarily symmetric) h.
SymMatrix conjugate(const Eigen::MatrixXd& h, const SymMatrix& a);

/// The endpoint-projection cost bound K(z, r):
///   (|z|+r)(1 + |z|^{1/2} m(z)^{-1/2}) m(z)^{-1/2} r^{1/2} + sqrt((|z|+r) r)
/// for z != 0, and r when z = 0, with m(z) the smallest positive eigenvalue.
double k_bound(const PsdMatrix& z, double r);

/// Identifies a triangular coefficient sequence (lambda_{kk'})_{k<=k'}, given
/// row-major, with the symmetric matrix carrying halved off-diagonals, so
/// that sum_{k<=k'} lambda_{kk'} a_{kk'} equals the entrywise dot for all
/// symmetric a.
SymMatrix lambda_embed(std::span<const double> upper_row_major);

/// Random PSD matrix L L^T with Gaussian factor entries, rescaled so the
/// norm is uniform on (0, max_norm]. Used by validators and property tests.
PsdMatrix random_psd(int dim, std::mt19937_64& rng, double max_norm = 2.0);

/// Random symmetric matrix with Gaussian entries scaled to a target norm.
SymMatrix random_sym(int dim, std::mt19937_64& rng, double max_norm = 2.0);

}  // namespace vecspin
