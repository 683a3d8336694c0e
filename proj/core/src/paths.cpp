#include "vecspin/paths.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace vecspin {

StepPath::StepPath(std::vector<double> grid, std::vector<PsdMatrix> values) {
  if (values.empty()) throw std::invalid_argument("StepPath: no values");
  if (grid.size() != values.size() + 1)
    throw std::invalid_argument("StepPath: grid must have one more entry than values");
  if (std::abs(grid.front()) > 0.0 || std::abs(grid.back() - 1.0) > 1e-12)
    throw std::invalid_argument("StepPath: grid must run from 0 to 1");
  grid.back() = 1.0;
  const int d = values[0].dim();
  for (const auto& v : values)
    if (v.dim() != d) throw std::invalid_argument("StepPath: value dimension mismatch");
  for (std::size_t j = 0; j + 1 < grid.size(); ++j)
    if (grid[j + 1] < grid[j]) throw std::domain_error("StepPath: grid not increasing");
  for (std::size_t j = 0; j + 1 < values.size(); ++j)
    if (!psd_order(values[j + 1], values[j]))
      throw std::domain_error("StepPath: values not increasing in the PSD order");

  // canonical form: drop zero-width intervals, merge equal consecutive values
  for (std::size_t j = 0; j < values.size();) {
    if (grid[j + 1] <= grid[j]) {
      values.erase(values.begin() + static_cast<long>(j));
      grid.erase(grid.begin() + static_cast<long>(j) + 1);
    } else {
      ++j;
    }
  }
  for (std::size_t j = 0; j + 1 < values.size();) {
    const double scale = 1.0 + values[j].norm();
    if ((values[j + 1].sym() - values[j].sym()).norm() <= 1e-14 * scale) {
      values.erase(values.begin() + static_cast<long>(j) + 1);
      grid.erase(grid.begin() + static_cast<long>(j) + 1);
    } else {
      ++j;
    }
  }
  if (values.empty()) throw std::invalid_argument("StepPath: all intervals empty");
  grid.front() = 0.0;
  grid.back() = 1.0;
  grid_ = std::move(grid);
  values_ = std::move(values);
  zero_ = PsdMatrix::zero(d);
}

StepPath StepPath::constant(PsdMatrix v) {
  std::vector<double> g{0.0, 1.0};
  std::vector<PsdMatrix> vals{std::move(v)};
  return StepPath(std::move(g), std::move(vals));
}

StepPath StepPath::zero(int dim) { return constant(PsdMatrix::zero(dim)); }

const PsdMatrix& StepPath::at(double s) const {
  if (s <= 0.0) return zero_;
  if (s > 1.0) throw std::out_of_range("StepPath::at: s outside (0,1]");
  auto it = std::lower_bound(grid_.begin(), grid_.end(), s);
  // grid[j] < s <= grid[j+1] selects level j; lower_bound finds first >= s
  std::size_t idx = static_cast<std::size_t>(it - grid_.begin());
  if (idx == 0) idx = 1;
  return values_[idx - 1];
}

bool StepPath::in_endpoint_class(const PsdMatrix& z, double tol) const {
  return (endpoint().sym() - z.sym()).norm() <= tol;
}

StepPath canonicalize(const StepPath& pi) {
  std::vector<double> g = pi.grid();
  std::vector<PsdMatrix> v;
  v.reserve(pi.levels());
  for (int j = 0; j < pi.levels(); ++j) v.push_back(pi.value(j));
  return StepPath(std::move(g), std::move(v));
}

double path_distance(const StepPath& a, const StepPath& b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("path_distance: dimension mismatch");
  std::set<double> cuts(a.grid().begin(), a.grid().end());
  cuts.insert(b.grid().begin(), b.grid().end());
  double total = 0.0;
  double prev = 0.0;
  for (double c : cuts) {
    if (c <= prev) continue;
    const double mid = 0.5 * (prev + c);
    total += (a.at(mid).sym() - b.at(mid).sym()).norm() * (c - prev);
    prev = c;
  }
  return total;
}

ProjectionResult project_to_endpoint(const StepPath& pi, const PsdMatrix& z) {
  const int d = pi.dim();
  if (z.dim() != d) throw std::invalid_argument("project_to_endpoint: dimension mismatch");
  const SymMatrix w_sym = pi.endpoint().sym() - z.sym();
  if (!psd_order(w_sym, SymMatrix(d)))
    throw std::domain_error("project_to_endpoint: endpoint(pi) - z is not PSD");
  const double wn = w_sym.norm();
  const double bound = k_bound(z, wn);

  const double z_scale = 1.0 + z.norm();
  const bool z_zero = std::all_of(z.eigenvalues().begin(), z.eigenvalues().end(),
                                  [&](double l) { return l <= kPsdTol * z_scale; });
  if (z_zero) {
    StepPath zero = StepPath::zero(d);
    return ProjectionResult(zero, path_distance(pi, zero), bound);
  }

  // positive eigenblock of z ("check" reduction; full block when z is pd)
  const int rank = static_cast<int>(std::count_if(
      z.eigenvalues().begin(), z.eigenvalues().end(),
      [&](double l) { return l > kPsdTol * z_scale; }));
  const Eigen::MatrixXd q = z.eigenvectors().leftCols(rank);  // D x rank
  Eigen::VectorXd lam(rank);
  for (int i = 0; i < rank; ++i) lam[i] = z.eigenvalues()[i];

  // h = sqrt(z_check) (sqrt(z_check + w_check))^{-1} in block coordinates
  const Eigen::MatrixXd end_block = q.transpose() * pi.endpoint().dense() * q;
  const PsdMatrix zw_block(SymMatrix::from_dense(0.5 * (end_block + end_block.transpose()), 1.0));
  const PsdMatrix sqrt_zw = sqrt_psd(zw_block);
  const SymMatrix inv_sqrt_zw = inverse_pd(sqrt_zw);
  Eigen::MatrixXd sqrt_z_block = Eigen::MatrixXd::Zero(rank, rank);
  for (int i = 0; i < rank; ++i) sqrt_z_block(i, i) = std::sqrt(lam[i]);
  // block coordinates diagonalize z, so sqrt(z_check) is diagonal there
  const Eigen::MatrixXd h = sqrt_z_block * inv_sqrt_zw.dense();

  std::vector<double> grid = pi.grid();
  std::vector<PsdMatrix> values;
  values.reserve(pi.levels());
  for (int j = 0; j < pi.levels(); ++j) {
    const Eigen::MatrixXd block = q.transpose() * pi.value(j).dense() * q;
    const Eigen::MatrixXd mapped = h * block * h.transpose();
    const Eigen::MatrixXd full = q * 0.5 * (mapped + mapped.transpose()) * q.transpose();
    values.emplace_back(SymMatrix::from_dense(0.5 * (full + full.transpose()), 1.0));
  }
  StepPath projected(std::move(grid), std::move(values));
  return ProjectionResult(projected, path_distance(pi, projected), bound);
}

StepPath lift_to_endpoint(const StepPath& pi, const PsdMatrix& z, const PsdMatrix& w,
                          double eps) {
  if (eps <= 0.0 || eps >= 1.0) throw std::invalid_argument("lift_to_endpoint: bad eps");
  const SymMatrix target = z.sym() + w.sym();
  if (!psd_order(target, pi.endpoint().sym()))
    throw std::domain_error("lift_to_endpoint: z + w does not dominate endpoint(pi)");

  std::vector<double> grid;
  std::vector<PsdMatrix> values;
  const double cut = 1.0 - eps;
  for (int j = 0; j < pi.levels(); ++j) {
    const double lo = pi.grid()[j];
    if (lo >= cut) break;
    grid.push_back(lo);
    values.push_back(pi.value(j));
  }
  grid.push_back(cut);
  values.emplace_back(PsdMatrix(target));
  grid.push_back(1.0);
  return StepPath(std::move(grid), std::move(values));
}

PsdMatrix dominating_shift(const PsdMatrix& z, const PsdMatrix& z_prime) {
  const double r = (z.sym() - z_prime.sym()).norm();
  return PsdMatrix(r * SymMatrix::identity(z.dim()));
}

}  // namespace vecspin
