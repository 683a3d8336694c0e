#pragma once

// Internal: shared level preparation for the cascade recursion and the
// sampling oracle. Not installed.

#include "vecspin/functional.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace vecspin::detail {

struct LevelData {
  double param = 0.0;      // cascade parameter: left grid point of the level
  int rank = 0;            // positive-eigenvalue count of the increment
  Eigen::MatrixXd proj;    // rank x n_atoms: (factor col t) . tau_i
  double inc_norm = 0.0;   // |mu_j - mu_{j-1}|
};

struct Prepared {
  std::vector<LevelData> levels;
  std::vector<double> base_expo;   // field . tau tau^T + log weight, per atom
  std::vector<std::vector<double>> outer_upper;  // tau tau^T upper triangle per atom
  int n_atoms = 0;
  int dim = 0;
  int tri = 0;
};

// Gaussian increments C_j C_j^T = grad_xi(gamma_j) - grad_xi(gamma_{j-1})
// starting from zero covariance; the left grid point is the cascade
// parameter. A negative increment beyond tolerance signals a violated
// monotonicity hypothesis, not numerical noise.
inline Prepared prepare(const MixtureModel& m, const SpinMeasure& p1, const StepPath& pi,
                        const SymMatrix& field) {
  const int d = m.dim();
  if (p1.dim() != d || pi.dim() != d || field.dim() != d)
    throw std::invalid_argument("parisi functional: dimension mismatch");

  Prepared pr;
  pr.dim = d;
  pr.n_atoms = p1.size();
  pr.tri = d * (d + 1) / 2;

  SymMatrix mu_prev(d);
  for (int j = 0; j < pi.levels(); ++j) {
    const SymMatrix mu = m.grad_xi(pi.value(j).sym());
    const SymMatrix delta = mu - mu_prev;
    const double scale = 1.0 + delta.norm();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(delta.dense());
    if (es.info() != Eigen::Success)
      throw std::runtime_error("parisi functional: eigendecomposition failed");
    if (es.eigenvalues()[0] < -kPsdTol * scale)
      throw std::domain_error(
          "parisi functional: non-PSD field increment ((H3) violated for this path)");

    LevelData lv;
    lv.param = pi.grid()[j];
    lv.inc_norm = delta.norm();
    std::vector<int> keep;
    for (int i = 0; i < d; ++i)
      if (es.eigenvalues()[i] > kPsdTol * scale) keep.push_back(i);
    lv.rank = static_cast<int>(keep.size());
    lv.proj.resize(lv.rank, pr.n_atoms);
    for (int t = 0; t < lv.rank; ++t) {
      const Eigen::VectorXd col =
          std::sqrt(es.eigenvalues()[keep[t]]) * es.eigenvectors().col(keep[t]);
      for (int i = 0; i < pr.n_atoms; ++i) lv.proj(t, i) = col.dot(p1.atoms()[i].tau);
    }
    pr.levels.push_back(std::move(lv));
    mu_prev = mu;
  }

  pr.base_expo.resize(pr.n_atoms);
  pr.outer_upper.resize(pr.n_atoms);
  for (int i = 0; i < pr.n_atoms; ++i) {
    const SymMatrix outer = SymMatrix::outer(p1.atoms()[i].tau);
    pr.base_expo[i] = field.dot(outer) + std::log(p1.atoms()[i].weight);
    pr.outer_upper[i] = outer.upper();
  }
  return pr;
}

inline double leaf_value(const Prepared& pr, const std::vector<double>& expo) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double e : expo) mx = std::max(mx, e);
  double s = 0.0;
  for (double e : expo) s += std::exp(e - mx);
  return mx + std::log(s);
}

// leaf value plus Gibbs average of tau tau^T over the atoms
inline double leaf_value_grad(const Prepared& pr, const std::vector<double>& expo,
                              std::vector<double>& grad) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double e : expo) mx = std::max(mx, e);
  double s = 0.0;
  std::fill(grad.begin(), grad.end(), 0.0);
  for (int i = 0; i < pr.n_atoms; ++i) {
    const double w = std::exp(expo[i] - mx);
    s += w;
    for (int k = 0; k < pr.tri; ++k) grad[k] += w * pr.outer_upper[i][k];
  }
  for (double& g : grad) g /= s;
  return mx + std::log(s);
}

}  // namespace vecspin::detail
