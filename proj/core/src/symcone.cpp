#include "vecspin/symcone.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace vecspin {

namespace {

void check_same_dim(int a, int b) {
  if (a != b) throw std::invalid_argument("dimension mismatch");
}

Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solve_eig(const SymMatrix& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a.dense());
  if (es.info() != Eigen::Success)
    throw std::runtime_error("symmetric eigendecomposition failed");
  return es;
}

}  // namespace

SymMatrix::SymMatrix(int dim) : dim_(dim) {
  if (dim < 1) throw std::invalid_argument("SymMatrix: dim must be positive");
  upper_.assign(static_cast<std::size_t>(dim) * (dim + 1) / 2, 0.0);
}

SymMatrix::SymMatrix(int dim, std::vector<double> upper_row_major)
    : dim_(dim), upper_(std::move(upper_row_major)) {
  if (dim < 1) throw std::invalid_argument("SymMatrix: dim must be positive");
  if (upper_.size() != static_cast<std::size_t>(dim) * (dim + 1) / 2)
    throw std::invalid_argument("SymMatrix: triangle length mismatch");
}

std::size_t SymMatrix::index(int i, int j) const {
  if (i < 0 || j < 0 || i >= dim_ || j >= dim_)
    throw std::out_of_range("SymMatrix: index out of range");
  if (i > j) std::swap(i, j);
  return static_cast<std::size_t>(i) * dim_ - static_cast<std::size_t>(i) * (i - 1) / 2 +
         static_cast<std::size_t>(j - i);
}

SymMatrix SymMatrix::identity(int dim) {
  SymMatrix a(dim);
  for (int i = 0; i < dim; ++i) a.set(i, i, 1.0);
  return a;
}

SymMatrix SymMatrix::diag(std::span<const double> d) {
  SymMatrix a(static_cast<int>(d.size()));
  for (int i = 0; i < a.dim(); ++i) a.set(i, i, d[i]);
  return a;
}

SymMatrix SymMatrix::outer(const Eigen::VectorXd& tau) {
  SymMatrix a(static_cast<int>(tau.size()));
  for (int i = 0; i < a.dim_; ++i)
    for (int j = i; j < a.dim_; ++j) a.set(i, j, tau[i] * tau[j]);
  return a;
}

SymMatrix SymMatrix::from_dense(const Eigen::MatrixXd& m, double sym_tol) {
  if (m.rows() != m.cols()) throw std::invalid_argument("from_dense: not square");
  const double asym = (m - m.transpose()).norm();
  if (asym > sym_tol * (1.0 + m.norm()))
    throw std::invalid_argument("from_dense: matrix is not symmetric");
  SymMatrix a(static_cast<int>(m.rows()));
  for (int i = 0; i < a.dim_; ++i)
    for (int j = i; j < a.dim_; ++j) a.set(i, j, 0.5 * (m(i, j) + m(j, i)));
  return a;
}

double SymMatrix::dot(const SymMatrix& b) const {
  check_same_dim(dim_, b.dim_);
  double s = 0.0;
  std::size_t k = 0;
  for (int i = 0; i < dim_; ++i)
    for (int j = i; j < dim_; ++j, ++k)
      s += (i == j ? 1.0 : 2.0) * upper_[k] * b.upper_[k];
  return s;
}

double SymMatrix::norm() const { return std::sqrt(std::max(0.0, dot(*this))); }

double SymMatrix::trace() const {
  double s = 0.0;
  for (int i = 0; i < dim_; ++i) s += (*this)(i, i);
  return s;
}

Eigen::MatrixXd SymMatrix::dense() const {
  Eigen::MatrixXd m(dim_, dim_);
  for (int i = 0; i < dim_; ++i)
    for (int j = i; j < dim_; ++j) m(i, j) = m(j, i) = (*this)(i, j);
  return m;
}

SymMatrix& SymMatrix::operator+=(const SymMatrix& b) {
  check_same_dim(dim_, b.dim_);
  for (std::size_t k = 0; k < upper_.size(); ++k) upper_[k] += b.upper_[k];
  return *this;
}

SymMatrix& SymMatrix::operator-=(const SymMatrix& b) {
  check_same_dim(dim_, b.dim_);
  for (std::size_t k = 0; k < upper_.size(); ++k) upper_[k] -= b.upper_[k];
  return *this;
}

SymMatrix& SymMatrix::operator*=(double c) {
  for (double& v : upper_) v *= c;
  return *this;
}

SymMatrix SymMatrix::operator-() const {
  SymMatrix a = *this;
  for (double& v : a.upper_) v = -v;
  return a;
}

PsdMatrix::PsdMatrix(SymMatrix a) : sym_(std::move(a)) {
  auto es = solve_eig(sym_);
  const double scale = 1.0 + sym_.norm();
  const int d = sym_.dim();
  eig_.resize(d);
  vec_.resize(d, d);
  // Eigen sorts ascending; flip to descending.
  for (int i = 0; i < d; ++i) {
    double lam = es.eigenvalues()[d - 1 - i];
    if (lam < -kPsdTol * scale)
      throw std::domain_error("PsdMatrix: matrix is not positive semi-definite");
    eig_[i] = std::max(0.0, lam);
    vec_.col(i) = es.eigenvectors().col(d - 1 - i);
  }
}

PsdMatrix PsdMatrix::zero(int dim) { return PsdMatrix(SymMatrix(dim)); }
PsdMatrix PsdMatrix::identity(int dim) { return PsdMatrix(SymMatrix::identity(dim)); }
PsdMatrix PsdMatrix::diag(std::span<const double> d) { return PsdMatrix(SymMatrix::diag(d)); }
PsdMatrix PsdMatrix::outer(const Eigen::VectorXd& tau) { return PsdMatrix(SymMatrix::outer(tau)); }

bool psd_order(const SymMatrix& a, const SymMatrix& b) {
  check_same_dim(a.dim(), b.dim());
  const SymMatrix d = a - b;
  auto es = solve_eig(d);
  return es.eigenvalues()[0] >= -kPsdTol * (1.0 + d.norm());
}

bool psd_order(const PsdMatrix& a, const PsdMatrix& b) { return psd_order(a.sym(), b.sym()); }

PsdMatrix sqrt_psd(const PsdMatrix& a) {
  const int d = a.dim();
  Eigen::VectorXd s(d);
  for (int i = 0; i < d; ++i) s[i] = std::sqrt(a.eigenvalues()[i]);
  Eigen::MatrixXd r = a.eigenvectors() * s.asDiagonal() * a.eigenvectors().transpose();
  return PsdMatrix(SymMatrix::from_dense(r));
}

double min_positive_eig(const PsdMatrix& a) {
  const double scale = 1.0 + a.norm();
  double best = -1.0;
  for (double lam : a.eigenvalues())
    if (lam > kPsdTol * scale) best = lam;  // descending order: last kept is smallest
  if (best < 0.0)
    throw std::domain_error("min_positive_eig: no positive eigenvalue (zero matrix)");
  return best;
}

SymMatrix inverse_pd(const PsdMatrix& a) {
  const int d = a.dim();
  const double scale = 1.0 + a.norm();
  Eigen::VectorXd inv(d);
  for (int i = 0; i < d; ++i) {
    const double lam = a.eigenvalues()[i];
    if (lam <= kPsdTol * scale)
      throw std::domain_error("inverse_pd: matrix is singular");
    inv[i] = 1.0 / lam;
  }
  Eigen::MatrixXd r = a.eigenvectors() * inv.asDiagonal() * a.eigenvectors().transpose();
  return SymMatrix::from_dense(r);
}

SymMatrix conjugate(const Eigen::MatrixXd& h, const SymMatrix& a) {
  Eigen::MatrixXd r = h * a.dense() * h.transpose();
  // h a h^T is symmetric up to roundoff for symmetric a.
  return SymMatrix::from_dense(0.5 * (r + r.transpose()), 1.0);
}

double k_bound(const PsdMatrix& z, double r) {
  if (r < 0.0) throw std::invalid_argument("k_bound: r must be nonnegative");
  const double zn = z.norm();
  const bool zero = std::all_of(z.eigenvalues().begin(), z.eigenvalues().end(),
                                [&](double lam) { return lam <= kPsdTol * (1.0 + zn); });
  if (zero) return r;
  const double m = min_positive_eig(z);
  return (zn + r) * (1.0 + std::sqrt(zn) / std::sqrt(m)) / std::sqrt(m) * std::sqrt(r) +
         std::sqrt((zn + r) * r);
}

SymMatrix lambda_embed(std::span<const double> upper_row_major) {
  // length D(D+1)/2 determines D
  const std::size_t n = upper_row_major.size();
  int dim = static_cast<int>(std::round((std::sqrt(8.0 * static_cast<double>(n) + 1.0) - 1.0) / 2.0));
  if (static_cast<std::size_t>(dim) * (dim + 1) / 2 != n || dim < 1)
    throw std::invalid_argument("lambda_embed: length is not a triangle number");
  SymMatrix a(dim);
  std::size_t k = 0;
  for (int i = 0; i < dim; ++i)
    for (int j = i; j < dim; ++j, ++k)
      a.set(i, j, i == j ? upper_row_major[k] : 0.5 * upper_row_major[k]);
  return a;
}

PsdMatrix random_psd(int dim, std::mt19937_64& rng, double max_norm) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Eigen::MatrixXd l(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) l(i, j) = gauss(rng);
  Eigen::MatrixXd a = l * l.transpose();
  const double n = a.norm();
  const double target = max_norm * std::max(1e-6, unif(rng));
  if (n > 0.0) a *= target / n;
  return PsdMatrix(SymMatrix::from_dense(a));
}

SymMatrix random_sym(int dim, std::mt19937_64& rng, double max_norm) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  SymMatrix a(dim);
  for (int i = 0; i < dim; ++i)
    for (int j = i; j < dim; ++j) a.set(i, j, gauss(rng));
  const double n = a.norm();
  if (n > 0.0) a *= max_norm * std::max(1e-6, unif(rng)) / n;
  return a;
}

}  // namespace vecspin
