#include "vecspin/varforms.hpp"
#include <cstdio>
#include <cstdlib>

#include "vecspin/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace vecspin {

namespace {

constexpr double kInfeasible = 1e100;

int tri_size(int d) { return d * (d + 1) / 2; }

SymMatrix sym_from_raw(int d, const double* p) {
  SymMatrix y(d);
  int k = 0;
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) y.set(i, j, p[k++]);
  return y;
}

Eigen::MatrixXd lower_from_raw(int d, const double* p) {
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(d, d);
  int k = 0;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j <= i; ++j) l(i, j) = p[k++];
  return l;
}

SymMatrix psd_sym_from_factor(int d, const double* p) {
  const Eigen::MatrixXd l = lower_from_raw(d, p);
  return SymMatrix::from_dense(l * l.transpose(), 1.0);
}

std::vector<double> factor_params_of(const SymMatrix& a) {
  // pivoted LDL^T-free route: eigendecompose and take V sqrt(L) as a square factor
  const PsdMatrix p(a);
  const int d = a.dim();
  Eigen::MatrixXd f(d, d);
  for (int i = 0; i < d; ++i)
    f.col(i) = std::sqrt(p.eigenvalues()[i]) * p.eigenvectors().col(i);
  // reduce to lower-triangular via QR of f^T (f f^T = a)
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(f.transpose());
  Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  std::vector<double> out;
  out.reserve(tri_size(d));
  for (int i = 0; i < d; ++i)
    for (int j = 0; j <= i; ++j) out.push_back(r(j, i));
  return out;
}

// softmax widths: r positive interval widths summing to 1
std::vector<double> softmax_widths(const double* p, int r) {
  double mx = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < r; ++i) mx = std::max(mx, p[i]);
  std::vector<double> w(r);
  double s = 0.0;
  for (int i = 0; i < r; ++i) {
    w[i] = std::exp(p[i] - mx);
    s += w[i];
  }
  for (double& v : w) v /= s;
  return w;
}

std::vector<double> cumulative_grid(const std::vector<double>& widths) {
  std::vector<double> g(widths.size() + 1, 0.0);
  for (std::size_t i = 0; i < widths.size(); ++i) g[i + 1] = g[i] + widths[i];
  g.back() = 1.0;
  return g;
}

QuadratureSpec clamp_gh(const QuadratureSpec& quad, int dim, int levels) {
  if (quad.mode != QuadMode::gauss_hermite) return quad;
  QuadratureSpec q = quad;
  const double dims = static_cast<double>(dim) * levels;
  int cap = static_cast<int>(std::floor(std::pow(1e7, 1.0 / dims)));
  if (cap < 4)
    throw std::domain_error("optimizer: gauss-hermite infeasible at this (D, levels); use monte-carlo");
  q.gh_nodes = std::min(q.gh_nodes, cap);
  return q;
}

// ---------------------------------------------------------------------------
// Path parametrizations

// Unconstrained endpoint: gamma_j = sum_{i<=j} L_i L_i^T over factor entries.
struct FreePathParam {
  int d = 1, r = 1;
  GridMode mode = GridMode::free;

  int n_params() const { return r * tri_size(d) + (mode == GridMode::free ? r : 0); }

  StepPath build(const std::vector<double>& p) const {
    const int tri = tri_size(d);
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(d, d);
    std::vector<PsdMatrix> vals;
    vals.reserve(r);
    for (int j = 0; j < r; ++j) {
      const Eigen::MatrixXd l = lower_from_raw(d, p.data() + j * tri);
      acc += l * l.transpose();
      vals.emplace_back(SymMatrix::from_dense(acc, 1.0));
    }
    std::vector<double> widths(r, 1.0 / r);
    if (mode == GridMode::free) widths = softmax_widths(p.data() + r * tri, r);
    return StepPath(cumulative_grid(widths), std::move(vals));
  }
};

// Fixed endpoint z: gamma_j = sqrt(z) A_j sqrt(z) with A_j normalized
// cumulative PSD increments, reduced to the positive eigenblock of z.
struct PinnedPathParam {
  int d = 1, r = 1, rank = 0;
  GridMode mode = GridMode::free;
  Eigen::MatrixXd q;         // d x rank eigenvectors of z
  Eigen::VectorXd sqrt_lam;  // sqrt of positive eigenvalues
  bool zero_z = true;

  static PinnedPathParam make(const PsdMatrix& z, int r, GridMode mode) {
    PinnedPathParam pp;
    pp.d = z.dim();
    pp.r = r;
    pp.mode = mode;
    const double scale = 1.0 + z.norm();
    std::vector<int> keep;
    for (int i = 0; i < pp.d; ++i)
      if (z.eigenvalues()[i] > kPsdTol * scale) keep.push_back(i);
    pp.rank = static_cast<int>(keep.size());
    pp.zero_z = pp.rank == 0;
    if (!pp.zero_z) {
      pp.q.resize(pp.d, pp.rank);
      pp.sqrt_lam.resize(pp.rank);
      for (int t = 0; t < pp.rank; ++t) {
        pp.q.col(t) = z.eigenvectors().col(keep[t]);
        pp.sqrt_lam[t] = std::sqrt(z.eigenvalues()[keep[t]]);
      }
    }
    return pp;
  }

  int n_params() const {
    return zero_z ? 0 : r * tri_size(rank) + (mode == GridMode::free ? r : 0);
  }

  StepPath build(const std::vector<double>& p) const {
    if (zero_z) return StepPath::zero(d);
    const int tri = tri_size(rank);
    const double delta = 1e-9;

    std::vector<Eigen::MatrixXd> cum(r);
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(rank, rank);
    for (int j = 0; j < r; ++j) {
      const Eigen::MatrixXd b = lower_from_raw(rank, p.data() + j * tri);
      acc += b * b.transpose() + (delta / r) * Eigen::MatrixXd::Identity(rank, rank);
      cum[j] = acc;
    }
    // S^{-1/2} with S the full sum; A_r = I exactly by construction
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(acc);
    Eigen::VectorXd inv_sqrt = es.eigenvalues().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
    const Eigen::MatrixXd s_inv_half =
        es.eigenvectors() * inv_sqrt.asDiagonal() * es.eigenvectors().transpose();

    std::vector<PsdMatrix> vals;
    vals.reserve(r);
    for (int j = 0; j < r; ++j) {
      const Eigen::MatrixXd a = s_inv_half * cum[j] * s_inv_half;
      const Eigen::MatrixXd block =
          sqrt_lam.asDiagonal() * (0.5 * (a + a.transpose())) * sqrt_lam.asDiagonal();
      const Eigen::MatrixXd full = q * block * q.transpose();
      vals.emplace_back(SymMatrix::from_dense(0.5 * (full + full.transpose()), 1.0));
    }
    std::vector<double> widths(r, 1.0 / r);
    if (mode == GridMode::free) widths = softmax_widths(p.data() + r * tri, r);
    return StepPath(cumulative_grid(widths), std::move(vals));
  }
};

// structured path starts: near-zero, constant at the hull barycenter, and a
// late lift toward the barycenter / pinned endpoint
template <typename Param>
std::vector<std::vector<double>> path_starts(const Param& pp, int n_params, int path_tri,
                                             const std::vector<double>& const_factor,
                                             int restarts, uint64_t seed) {
  std::vector<std::vector<double>> starts;
  const int r = pp.r;
  const bool free_grid = pp.mode == GridMode::free;

  auto with_grid = [&](std::vector<double> v, double last_width_logit) {
    if (free_grid) {
      v.resize(static_cast<std::size_t>(n_params), 0.0);
      if (last_width_logit != 0.0) v[n_params - 1] = last_width_logit;
    }
    return v;
  };

  std::vector<double> near_zero(static_cast<std::size_t>(r) * path_tri, 0.02);
  starts.push_back(with_grid(near_zero, 0.0));

  if (!const_factor.empty()) {
    std::vector<double> constant(static_cast<std::size_t>(r) * path_tri, 0.0);
    for (int k = 0; k < path_tri; ++k) constant[k] = const_factor[k];
    starts.push_back(with_grid(constant, 0.0));

    std::vector<double> late(static_cast<std::size_t>(r) * path_tri, 0.0);
    for (int k = 0; k < path_tri; ++k)
      late[static_cast<std::size_t>(r - 1) * path_tri + k] = const_factor[k];
    starts.push_back(with_grid(late, -4.0));
  }

  std::mt19937_64 rng(derive_seed(seed, 0x5717, 0));
  std::normal_distribution<double> gauss(0.0, 0.35);
  while (static_cast<int>(starts.size()) < restarts) {
    std::vector<double> v(n_params);
    for (double& x : v) x = gauss(rng);
    starts.push_back(std::move(v));
  }
  starts.resize(std::max<std::size_t>(1, std::min<std::size_t>(starts.size(), restarts)));
  return starts;
}

// ---------------------------------------------------------------------------
// inf over Pi of P(pi, x), with warm starts across calls

class PathOnlySolver {
 public:
  PathOnlySolver(const MixtureModel& m, const SpinMeasure& p1, const OptimizerSpec& spec)
      : m_(m), p1_(p1), spec_(spec), quad_(clamp_gh(spec.quad, m.dim(), spec.levels)) {
    pp_.d = m.dim();
    pp_.r = spec.levels;
    pp_.mode = spec.grid_mode;
    SymMatrix bary(m.dim());
    for (const auto& a : p1.atoms()) bary += a.weight * SymMatrix::outer(a.tau);
    bary_factor_ = factor_params_of(bary);
  }

  struct Result {
    double value = 0.0;
    StepPath path;
    std::vector<double> params;
    long evals = 0;
    bool converged = true;
    Result(int dim) : path(StepPath::zero(dim)) {}
  };

  // full multi-start solve on the first call, warm continuation afterwards
  Result solve(const SymMatrix& x, bool full = false) {
    auto objective = [&](const std::vector<double>& p) {
      try {
        const StepPath pi = pp_.build(p);
        // optimal endpoints live in the overlap hull; far outside it the
        // quadrature leaves its validity range, so wall the search off
        const double en = pi.endpoint().norm();
        if (en > spec_.norm_cap)
          return 1e3 * (en - spec_.norm_cap) * (en - spec_.norm_cap) +
                 1e3 * (1.0 + std::abs(x.dot(x)));
        return parisi_functional(m_, p1_, pi, x, quad_).value;
      } catch (const std::exception&) {
        return kInfeasible;
      }
    };
    Result best(pp_.d);
    best.value = std::numeric_limits<double>::infinity();

    std::vector<std::vector<double>> starts;
    if (calls_ == 0 || full) {
      starts = path_starts(pp_, pp_.n_params(), tri_size(pp_.d), bary_factor_,
                           spec_.restarts, spec_.seed);
      if (warm_) starts.insert(starts.begin(), *warm_);
    } else {
      starts.push_back(*warm_);
      if (calls_ % 5 == 0)
        starts.push_back(path_starts(pp_, pp_.n_params(), tri_size(pp_.d), bary_factor_, 1,
                                     derive_seed(spec_.seed, 0xCA11, calls_))[0]);
    }

    SimplexOptions opts;
    const bool fresh = calls_ == 0 || full;
    opts.max_evals = fresh ? spec_.max_evals : spec_.max_evals / 3;
    opts.ftol = (fresh ? 0.02 : 0.08) * spec_.tol_value;
    for (const auto& s0 : starts) {
      const SimplexResult r = nelder_mead(objective, s0, opts);
      best.evals += r.evals;
      if (r.value < best.value) {
        best.value = r.value;
        best.params = r.x;
        best.converged = r.converged;
      }
    }
    best.path = pp_.build(best.params);
    warm_ = best.params;
    ++calls_;
    return best;
  }

  const QuadratureSpec& quad() const { return quad_; }

 private:
  const MixtureModel& m_;
  const SpinMeasure& p1_;
  OptimizerSpec spec_;
  QuadratureSpec quad_;
  FreePathParam pp_;
  std::vector<double> bary_factor_;
  std::optional<std::vector<double>> warm_;
  int calls_ = 0;
};

// ---------------------------------------------------------------------------
// inf over (y, pi) of P(pi, y) - y . z_lin, with the coercive-regularization
// schedule and the divergence detector

enum class YDomain { sym, psd };

class InnerSolver {
 public:
  InnerSolver(const MixtureModel& m, const SpinMeasure& p1, const OptimizerSpec& spec,
              YDomain ydom, bool pinned)
      : m_(m), p1_(p1), spec_(spec), quad_(clamp_gh(spec.quad, m.dim(), spec.levels)),
        ydom_(ydom), pinned_(pinned) {
    SymMatrix bary(m.dim());
    for (const auto& a : p1.atoms()) bary += a.weight * SymMatrix::outer(a.tau);
    bary_factor_ = factor_params_of(bary);
  }

  struct Result {
    double value = 0.0;     // inf with the regularizer removed
    bool finite = true;
    double surrogate = 0.0; // quadratic-regularized value when divergent
    double reg_value = 0.0; // coercively regularized value: finite and smooth
                            // in the tilt even where the raw inf diverges
    SymMatrix y;
    StepPath path;
    long evals = 0;
    bool converged = true;
    Result(int dim) : y(dim), path(StepPath::zero(dim)) {}
  };

  Result solve(const SymMatrix& z_lin, const std::optional<PsdMatrix>& endpoint) {
    const int d = m_.dim();
    const int ytri = tri_size(d);

    FreePathParam fp{d, spec_.levels, spec_.grid_mode};
    PinnedPathParam cp;
    int path_params = 0, path_tri = 0;
    if (pinned_) {
      cp = PinnedPathParam::make(*endpoint, spec_.levels, spec_.grid_mode);
      path_params = cp.n_params();
      path_tri = tri_size(std::max(1, cp.rank));
    } else {
      path_params = fp.n_params();
      path_tri = tri_size(d);
    }
    const int n = ytri + path_params;

    auto build_y = [&](const std::vector<double>& p) {
      return ydom_ == YDomain::sym ? sym_from_raw(d, p.data())
                                   : psd_sym_from_factor(d, p.data());
    };
    auto build_path = [&](const std::vector<double>& p) {
      std::vector<double> tail(p.begin() + ytri, p.end());
      return pinned_ ? cp.build(tail) : fp.build(tail);
    };
    auto raw_objective = [&](const std::vector<double>& p) {
      const SymMatrix y = build_y(p);
      const StepPath pi = build_path(p);
      return parisi_functional(m_, p1_, pi, y, quad_).value - y.dot(z_lin);
    };

    Result res(d);

    // regularized minimization at a given epsilon; kind 0: eps sqrt(1+|y|^2),
    // kind 1: eps |y|^2
    auto minimize = [&](double eps, int kind, const std::vector<double>& s0, long budget) {
      auto obj = [&](const std::vector<double>& p) {
        try {
          const SymMatrix y = build_y(p);
          const double yn2 = y.dot(y);
          const double yn = std::sqrt(yn2);
          double reg = kind == 0 ? eps * std::sqrt(1.0 + yn2) : eps * yn2;
          // containment: keep divergent runs at a scale the detector can
          // classify instead of drifting to overflow
          const double wall = 3.0 * spec_.norm_cap;
          if (yn > wall) reg += 100.0 * (yn - wall) * (yn - wall);
          const StepPath pi = build_path(p);
          const double en = pi.endpoint().norm();
          if (!pinned_ && en > spec_.norm_cap)
            reg += 1e3 * (en - spec_.norm_cap) * (en - spec_.norm_cap) + 1e3;
          return parisi_functional(m_, p1_, pi, y, quad_).value - y.dot(z_lin) + reg;
        } catch (const std::exception&) {
          return kInfeasible;
        }
      };
      SimplexOptions opts;
      opts.max_evals = budget;
      opts.ftol = (calls_ == 0 ? 0.02 : 0.08) * spec_.tol_value;
      return nelder_mead(obj, s0, opts);
    };

    // starting points: warm, zero field, field equal to z_lin, a late-lift
    // path shape, then random fill
    std::vector<std::vector<double>> starts;
    const bool full = calls_ == 0;
    if (warm_ && static_cast<int>(warm_->size()) == n) starts.push_back(*warm_);
    if (full || starts.empty()) {
      starts.emplace_back(n, 0.02);
      if (ydom_ == YDomain::sym) {
        std::vector<double> zs(n, 0.01);
        int k = 0;
        for (int i = 0; i < d; ++i)
          for (int j = i; j < d; ++j) zs[k] = z_lin(i, j), ++k;
        starts.push_back(std::move(zs));
      }
      {
        // levels near zero until a final jump close to s = 1
        std::vector<double> late(n, 0.0);
        std::vector<double> jump;
        if (pinned_) {
          // unit-increment factor in block coordinates: the last cumulative
          // step carries all of A_r = I
          jump.assign(path_tri, 0.0);
          for (int i = 0; i < std::max(1, cp.rank); ++i) jump[i * (i + 1) / 2 + i] = 1.0;
        } else {
          jump = bary_factor_;
        }
        const int r = spec_.levels;
        if (static_cast<int>(jump.size()) == path_tri) {
          for (int k = 0; k < path_tri; ++k)
            late[ytri + static_cast<std::size_t>(r - 1) * path_tri + k] = jump[k];
          if (spec_.grid_mode == GridMode::free) late[n - 1] = -4.0;
          starts.push_back(std::move(late));
        }
      }
      std::mt19937_64 rng(derive_seed(spec_.seed, 0x1227, calls_));
      std::normal_distribution<double> gauss(0.0, 0.35);
      while (static_cast<int>(starts.size()) < std::max(3, spec_.restarts / 2)) {
        std::vector<double> v(n);
        for (double& x : v) x = gauss(rng);
        starts.push_back(std::move(v));
      }
    }

    // full coercive schedule on fresh solves; warm continuations refine at
    // the final epsilon only and escalate back to the full schedule before
    // any divergence declaration
    std::vector<double> schedule{1e-1, 1e-2, 1e-3};
    if (!full) schedule = {1e-3};

    std::vector<double> best_p;
    double best_reg = std::numeric_limits<double>::infinity();
    bool capped_everywhere = true;

    auto run_schedule = [&](const std::vector<double>& eps_list,
                            const std::vector<std::vector<double>>& first_starts) {
      capped_everywhere = true;
      for (std::size_t e = 0; e < eps_list.size(); ++e) {
        std::vector<std::vector<double>> stage_starts;
        if (e == 0) {
          stage_starts = first_starts;
        } else {
          stage_starts.push_back(best_p);
        }
        double stage_best = std::numeric_limits<double>::infinity();
        std::vector<double> stage_p;
        for (const auto& s0 : stage_starts) {
          const long budget = (e == 0 && full) ? spec_.max_evals
                              : full            ? spec_.max_evals / 2
                                                : spec_.max_evals / 3;
          const SimplexResult r = minimize(eps_list[e], 0, s0, budget);
          res.evals += r.evals;
          if (r.value < stage_best) {
            stage_best = r.value;
            stage_p = r.x;
          }
        }
        best_p = stage_p;
        best_reg = stage_best;
        if (build_y(best_p).norm() < 0.95 * spec_.norm_cap) capped_everywhere = false;
      }
    };

    run_schedule(schedule, starts);
    if (capped_everywhere && schedule.size() == 1) {
      // re-examine with the full schedule before declaring a divergence
      std::vector<std::vector<double>> fresh{best_p};
      fresh.emplace_back(n, 0.02);
      run_schedule({1e-1, 1e-2, 1e-3}, fresh);
    }

    if (capped_everywhere) {
      // Lipschitz slope exceeds the tilt: probe with the quadratic coercive
      // regularizer and report the divergence surrogate. The contaminated
      // minimizer is not kept as a warm start.
      const SimplexResult probe =
          minimize(1e-4, 1, best_p, spec_.max_evals / 2);
      res.evals += probe.evals;
      res.finite = false;
      res.surrogate = probe.value;
      res.reg_value = std::min(best_reg, probe.value);
      res.value = -std::numeric_limits<double>::infinity();
      res.y = build_y(probe.x);
      res.path = build_path(probe.x);
      warm_.reset();
      ++calls_;
      return res;
    }

    res.finite = true;
    res.value = raw_objective(best_p);
    res.surrogate = res.value;
    res.reg_value = best_reg;
    res.y = build_y(best_p);
    res.path = build_path(best_p);
    if (res.y.norm() <= 2.0 * spec_.norm_cap) {
      warm_ = best_p;
    } else {
      warm_.reset();
    }
    ++calls_;
    return res;
  }

 private:
  const MixtureModel& m_;
  const SpinMeasure& p1_;
  OptimizerSpec spec_;
  QuadratureSpec quad_;
  YDomain ydom_;
  bool pinned_;
  std::vector<double> bary_factor_;
  std::optional<std::vector<double>> warm_;
  int calls_ = 0;
};

}  // namespace

// ---------------------------------------------------------------------------
// public operations

VariationalResult parisi_value(const MixtureModel& m, const SpinMeasure& p1, const SymMatrix& x,
                               const OptimizerSpec& spec) {
  PathOnlySolver solver(m, p1, spec);
  const auto r = solver.solve(x, true);
  VariationalResult out(m.dim());
  out.value = r.value;
  out.path = r.path;
  out.evals = r.evals;
  out.converged = r.converged;
  if (!r.converged) out.message = "simplex budget exhausted before collapse";
  if (spec.quad.mode == QuadMode::monte_carlo)
    out.std_error = parisi_functional(m, p1, r.path, x, solver.quad()).std_error;
  return out;
}

VariationalResult parisi_value_constrained(const MixtureModel& m, const SpinMeasure& p1,
                                           const SymMatrix& x, const PsdMatrix& z,
                                           const OptimizerSpec& spec) {
  const QuadratureSpec quad = clamp_gh(spec.quad, m.dim(), spec.levels);
  PinnedPathParam pp = PinnedPathParam::make(z, spec.levels, spec.grid_mode);
  VariationalResult out(m.dim());
  out.z_opt = z.sym();

  if (pp.n_params() == 0) {
    out.path = StepPath::zero(m.dim());
    out.value = parisi_functional(m, p1, out.path, x, quad).value;
    out.evals = 1;
    return out;
  }

  auto objective = [&](const std::vector<double>& p) {
    try {
      return parisi_functional(m, p1, pp.build(p), x, quad).value;
    } catch (const std::exception&) {
      return kInfeasible;
    }
  };

  // pinned-block factor of z restricted to its positive eigenblock
  std::vector<double> zfac;
  {
    Eigen::MatrixXd zb = pp.sqrt_lam.asDiagonal();
    SymMatrix zblock = SymMatrix::from_dense(zb * zb.transpose(), 1.0);
    zfac = factor_params_of(zblock);
  }
  auto starts = path_starts(pp, pp.n_params(), tri_size(pp.rank), zfac, spec.restarts,
                            spec.seed);

  SimplexOptions opts;
  opts.max_evals = spec.max_evals;
  opts.ftol = 0.02 * spec.tol_value;
  double best = std::numeric_limits<double>::infinity();
  std::vector<double> best_p;
  bool converged = false;
  for (const auto& s0 : starts) {
    const SimplexResult r = nelder_mead(objective, s0, opts);
    out.evals += r.evals;
    if (r.value < best) {
      best = r.value;
      best_p = r.x;
      converged = r.converged;
    }
    out.trace.emplace_back(out.evals, best);
  }
  out.value = best;
  out.path = pp.build(best_p);
  out.converged = converged;
  if (!converged) out.message = "simplex budget exhausted before collapse";
  if (spec.quad.mode == QuadMode::monte_carlo)
    out.std_error = parisi_functional(m, p1, out.path, x, quad).std_error;
  return out;
}

GradParisiResult grad_parisi(const MixtureModel& m, const SpinMeasure& p1, const SymMatrix& x,
                             const OptimizerSpec& spec) {
  const QuadratureSpec quad = clamp_gh(spec.quad, m.dim(), spec.levels);
  PathOnlySolver solver(m, p1, spec);
  const auto at_x = solver.solve(x, true);

  const SymMatrix envelope = functional_gradient_x(m, p1, at_x.path, x, quad).grad;

  VariationalResult vr(m.dim());
  vr.value = at_x.value;
  vr.path = at_x.path;
  vr.evals = at_x.evals;
  vr.converged = at_x.converged;
  GradParisiResult out(envelope, std::move(vr));

  if (spec.cross_check_gradient) {
    // central differences of the optimized value, warm-started, CRN
    OptimizerSpec cheap = spec;
    cheap.restarts = 1;
    cheap.max_evals = spec.max_evals / 2;
    const double h = 1e-3;
    const int d = m.dim();
    double max_dev = 0.0;
    for (int i = 0; i < d; ++i)
      for (int j = i; j < d; ++j) {
        SymMatrix basis(d);
        basis.set(i, j, 1.0);
        const double denom = (i == j) ? 1.0 : 2.0;
        const double fp = solver.solve(x + h * basis).value;
        const double fm = solver.solve(x - h * basis).value;
        const double fd = (fp - fm) / (2.0 * h) / denom;
        max_dev = std::max(max_dev, std::abs(fd - envelope(i, j)));
      }
    out.fd_max_dev = max_dev;
    out.fd_consistent = max_dev <= 5.0 * spec.tol_value;
  }
  return out;
}

namespace {

// Outer suprema run projected supergradient ascent: each inner solve hands
// back the envelope gradient for free, the landscapes are smooth and
// low-dimensional, and common random numbers make backtracking on the value
// reliable. The derivative-free simplex stays on the inner infima, where
// merges make the objective nonsmooth.
struct OuterEval {
  double value = 0.0;
  SymMatrix grad;
  bool finite = true;
  OuterEval(double v, SymMatrix g, bool f) : value(v), grad(std::move(g)), finite(f) {}
};

VariationalResult outer_ascent(
    int dim, const OptimizerSpec& spec,
    const std::function<SymMatrix(const SymMatrix&)>& project,
    const std::function<OuterEval(const SymMatrix&)>& oracle,
    const std::function<void(VariationalResult&, const SymMatrix&)>& finalize,
    const std::vector<SymMatrix>& starts) {
  VariationalResult out(dim);
  double best = -std::numeric_limits<double>::infinity();
  SymMatrix best_z(dim);
  long iter_total = 0;

  const bool debug = std::getenv("VECSPIN_ASCENT_DEBUG") != nullptr;
  const double gain_floor = 0.02 * spec.tol_value;
  for (const auto& s0 : starts) {
    SymMatrix z = project(s0);
    OuterEval cur = oracle(z);
    ++iter_total;
    double step = 0.5;
    for (int it = 0; it < 25; ++it) {
      bool improved = false;
      for (int bt = 0; bt < 6; ++bt) {
        const SymMatrix cand = project(z + step * cur.grad);
        if ((cand - z).norm() < 1e-10) break;
        const OuterEval trial = oracle(cand);
        ++iter_total;
        if (debug)
          std::fprintf(stderr, "[ascent] it=%d bt=%d step=%.3g cur=%.8f trial=%.8f |g|=%.3g\n",
                       it, bt, step, cur.value, trial.value, cur.grad.norm());
        if (trial.value > cur.value + gain_floor) {
          z = cand;
          cur = trial;
          improved = true;
          step = std::min(2.0, step * 1.4);
          break;
        }
        if (trial.value > cur.value) {  // keep tiny gains but stop ascending
          z = cand;
          cur = trial;
        }
        step *= 0.35;
      }
      if (!improved) break;
      if (step < 1e-6) break;
    }
    if (cur.value > best) {
      best = cur.value;
      best_z = z;
    }
    out.trace.emplace_back(iter_total, best);
  }

  out.evals = iter_total;
  out.value = best;
  out.z_opt = best_z;
  finalize(out, best_z);
  return out;
}

// projection of a symmetric matrix onto the norm-capped PSD cone
SymMatrix project_psd_capped(const SymMatrix& a, double cap) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a.dense());
  Eigen::VectorXd lam = es.eigenvalues().cwiseMax(0.0);
  SymMatrix p = SymMatrix::from_dense(
      es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose(), 1.0);
  const double n = p.norm();
  if (n > cap) p *= cap / n;
  return p;
}

SymMatrix cap_sym(const SymMatrix& a, double cap) {
  SymMatrix p = a;
  const double n = p.norm();
  if (n > cap) p *= cap / n;
  return p;
}

std::vector<double> project_simplex_weights(std::vector<double> v) {
  std::vector<double> u = v;
  std::sort(u.begin(), u.end(), std::greater<double>());
  double css = 0.0, theta = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    css += u[i];
    const double t = (css - 1.0) / static_cast<double>(i + 1);
    if (u[i] - t > 0.0) theta = t;
  }
  for (double& vi : v) vi = std::max(0.0, vi - theta);
  return v;
}

}  // namespace

VariationalResult free_energy_pan(const MixtureModel& m, const SpinMeasure& p1,
                                  const OptimizerSpec& spec) {
  const OverlapHull hull(p1);
  const int nv = static_cast<int>(hull.vertices().size());
  InnerSolver inner(m, p1, spec, YDomain::sym, /*pinned=*/true);
  VariationalResult out(m.dim());

  auto value_at = [&](const SymMatrix& z) {
    const PsdMatrix zp(z);
    const auto r = inner.solve(z, zp);
    const double add = 0.5 * m.xi(z);
    return std::make_pair(r, r.finite ? r.value + add : r.surrogate + add);
  };

  if (nv == 1) {
    const SymMatrix z = hull.vertices()[0];
    auto [r, v] = value_at(z);
    out.value = v;
    out.path = r.path;
    out.y_opt = r.y;
    out.z_opt = z;
    out.evals = r.evals;
    out.diverged = !r.finite;
    return out;
  }

  // supergradient ascent over the hull weights: the envelope derivative of
  // the inner infimum in z is -y*, so d/dalpha_i = (-y* + grad_xi(z)/2) . V_i.
  // The ascent climbs the coercively regularized inner value, which stays
  // finite and smooth even where the raw infimum diverges.
  auto eval_alpha = [&](const std::vector<double>& alpha) {
    const SymMatrix z = hull.combine(alpha);
    const PsdMatrix zp(z);
    const auto r = inner.solve(z, zp);
    const double climb = r.reg_value + 0.5 * m.xi(z);
    const SymMatrix gz = 0.5 * m.grad_xi(z) - r.y;
    std::vector<double> ga(nv);
    for (int i = 0; i < nv; ++i) ga[i] = gz.dot(hull.vertices()[i]);
    return std::make_tuple(climb, ga, z);
  };

  std::vector<std::vector<double>> starts;
  starts.emplace_back(nv, 1.0 / nv);
  for (int v = 0; v < std::min(nv, std::max(1, spec.outer_restarts - 1)); ++v) {
    std::vector<double> s(nv, 0.02);
    s[v] = 1.0;
    starts.push_back(project_simplex_weights(std::move(s)));
  }

  double best = -std::numeric_limits<double>::infinity();
  std::vector<double> best_alpha;
  for (const auto& s0 : starts) {
    std::vector<double> alpha = s0;
    auto [val, grad, z] = eval_alpha(alpha);
    ++out.evals;
    double step = 0.5;
    const double gain_floor = 0.02 * spec.tol_value;
    for (int it = 0; it < 25; ++it) {
      bool improved = false;
      for (int bt = 0; bt < 6; ++bt) {
        std::vector<double> cand(nv);
        for (int i = 0; i < nv; ++i) cand[i] = alpha[i] + step * grad[i];
        cand = project_simplex_weights(std::move(cand));
        double delta = 0.0;
        for (int i = 0; i < nv; ++i) delta = std::max(delta, std::abs(cand[i] - alpha[i]));
        if (delta < 1e-10) break;
        auto [tv, tg, tz] = eval_alpha(cand);
        ++out.evals;
        if (tv > val + gain_floor) {
          alpha = cand;
          val = tv;
          grad = tg;
          improved = true;
          step = std::min(2.0, step * 1.4);
          break;
        }
        if (tv > val) {
          alpha = cand;
          val = tv;
          grad = tg;
        }
        step *= 0.35;
      }
      if (!improved || step < 1e-6) break;
    }
    if (val > best) {
      best = val;
      best_alpha = alpha;
    }
    out.trace.emplace_back(out.evals, best);
  }

  const SymMatrix z = hull.combine(best_alpha);
  auto [r, v] = value_at(z);
  out.value = v;
  out.path = r.path;
  out.y_opt = r.y;
  out.z_opt = z;
  out.diverged = !r.finite;
  return out;
}


VariationalResult free_energy_hj(const MixtureModel& m, const SpinMeasure& p1,
                                 const OptimizerSpec& spec) {
  const int d = m.dim();
  InnerSolver inner(m, p1, spec, YDomain::psd, /*pinned=*/false);

  auto project = [&](const SymMatrix& z) { return project_psd_capped(z, spec.norm_cap); };
  auto oracle = [&](const SymMatrix& z) {
    const auto r = inner.solve(z, std::nullopt);
    return OuterEval(r.reg_value + 0.5 * m.xi(z), 0.5 * m.grad_xi(z) - r.y, r.finite);
  };
  auto finalize = [&](VariationalResult& out, const SymMatrix& z) {
    const auto r = inner.solve(z, std::nullopt);
    out.value = (r.finite ? r.value : r.surrogate) + 0.5 * m.xi(z);
    out.path = r.path;
    out.y_opt = r.y;
    out.diverged = !r.finite;
  };

  SymMatrix bary(d);
  for (const auto& a : p1.atoms()) bary += a.weight * SymMatrix::outer(a.tau);
  std::vector<SymMatrix> starts{bary, 0.25 * SymMatrix::identity(d)};
  if (spec.outer_restarts > 2) starts.push_back(0.5 * bary + 0.5 * SymMatrix::identity(d));
  return outer_ascent(d, spec, project, oracle, finalize, starts);
}

VariationalResult hopf_value(const MixtureModel& m, const SpinMeasure& p1, double t,
                             const SymMatrix& x, const OptimizerSpec& spec) {
  if (t < 0.0) throw std::invalid_argument("hopf_value: t must be nonnegative");
  const int d = m.dim();
  const int tri = tri_size(d);
  const QuadratureSpec quad = clamp_gh(spec.quad, d, spec.levels);

  // The inner infimum over y is finite only where z lies in the closure of
  // the gradient range, so the supremum is taken through the substitution
  // z = grad P(y'): every candidate is feasible by construction and the
  // Fenchel equality collapses the inner problem,
  //   f(t,x) = sup_{y'} { P(y') + grad P(y') . (x - y') + t xi(grad P(y')) }.
  // At t = 0 the gradient inequality of the convex P makes this exactly P(x).
  PathOnlySolver paths(m, p1, spec);

  VariationalResult out(d);
  auto objective = [&](const std::vector<double>& p) {
    const SymMatrix yp = cap_sym(sym_from_raw(d, p.data()), spec.norm_cap);
    const auto r = paths.solve(yp);
    const SymMatrix g = functional_gradient_x(m, p1, r.path, yp, quad).grad;
    return -(r.value + g.dot(x - yp) + t * m.xi(g));
  };

  std::vector<std::vector<double>> starts;
  {
    std::vector<double> xs(tri, 0.0);
    int k = 0;
    for (int i = 0; i < d; ++i)
      for (int j = i; j < d; ++j) xs[k++] = x(i, j);
    starts.push_back(std::move(xs));
  }
  starts.emplace_back(tri, 0.0);
  std::mt19937_64 rng(derive_seed(spec.seed, 0x40FF, 0));
  std::normal_distribution<double> gauss(0.0, 0.4);
  while (static_cast<int>(starts.size()) < spec.outer_restarts) {
    std::vector<double> v(tri);
    for (double& g : v) g = gauss(rng);
    starts.push_back(std::move(v));
  }

  SimplexOptions opts;
  opts.max_evals = spec.outer_max_evals;
  opts.ftol = 0.02 * spec.tol_value;
  double best = -std::numeric_limits<double>::infinity();
  std::vector<double> best_p;
  for (const auto& s0 : starts) {
    const SimplexResult r = nelder_mead(objective, s0, opts);
    out.evals += r.evals;
    if (-r.value > best) {
      best = -r.value;
      best_p = r.x;
    }
    out.trace.emplace_back(out.evals, best);
  }

  const SymMatrix yp = cap_sym(sym_from_raw(d, best_p.data()), spec.norm_cap);
  const auto r = paths.solve(yp, true);
  const SymMatrix g = functional_gradient_x(m, p1, r.path, yp, quad).grad;
  out.value = r.value + g.dot(x - yp) + t * m.xi(g);
  out.path = r.path;
  out.y_opt = yp;
  out.z_opt = g;
  out.converged = r.converged;
  return out;
}

VariationalResult free_energy_xistar(const MixtureModel& m, const SpinMeasure& p1,
                                     const OptimizerSpec& spec) {
  const int d = m.dim();
  PathOnlySolver paths(m, p1, spec);
  const QuadratureSpec quad = clamp_gh(spec.quad, d, spec.levels);
  XiStarSpec xspec;
  xspec.seed = derive_seed(spec.seed, 0x715A, 0);

  auto project = [&](const SymMatrix& y) { return project_psd_capped(y, spec.norm_cap); };
  auto oracle = [&](const SymMatrix& y) {
    const XiStarResult xs = xi_star(m, 2.0 * y, xspec);
    if (xs.diverged) return OuterEval(-1e9 * (1.0 + y.norm()), -1.0 * y, false);
    const auto r = paths.solve(y);
    // envelope in y: Gibbs average of tau tau^T at the optimal path, minus
    // the conjugate maximizer
    const SymMatrix g = functional_gradient_x(m, p1, r.path, y, quad).grad - xs.maximizer;
    return OuterEval(r.value - 0.5 * xs.value, g, true);
  };
  auto finalize = [&](VariationalResult& out, const SymMatrix& y) {
    const auto r = paths.solve(y, true);
    const XiStarResult xs = xi_star(m, 2.0 * y, xspec);
    out.value = r.value - 0.5 * xs.value;
    out.path = r.path;
    out.y_opt = y;
    out.z_opt = xs.maximizer;
  };

  SymMatrix bary(d);
  for (const auto& a : p1.atoms()) bary += a.weight * SymMatrix::outer(a.tau);
  std::vector<SymMatrix> starts{0.5 * m.grad_xi(bary), 0.1 * SymMatrix::identity(d)};
  return outer_ascent(d, spec, project, oracle, finalize, starts);
}

std::pair<double, double> translate_panchenko(const MixtureModel& m, const SpinMeasure& p1,
                                              const SymMatrix& lambda, const PsdMatrix& z,
                                              const StepPath& pi, const QuadratureSpec& quad) {
  if (!pi.in_endpoint_class(z))
    throw std::invalid_argument("translate_panchenko: path endpoint differs from z");

  auto sum_entries = [](const SymMatrix& a) {
    double s = 0.0;
    for (int i = 0; i < a.dim(); ++i)
      for (int j = 0; j < a.dim(); ++j) s += a(i, j);
    return s;
  };
  auto theta_via_entries = [&](const SymMatrix& a) { return sum_entries(m.theta_entrywise(a)); };

  // original ingredients: cascade log-partition + entrywise theta sums
  const double phi = rpc_log_moment(m, p1, pi, lambda, quad).value;
  double theta_int = 0.0;
  for (int j = 0; j < pi.levels(); ++j)
    theta_int += theta_via_entries(pi.value(j).sym()) * pi.width(j);
  const double lhs =
      phi - lambda.dot(z.sym()) - 0.5 * theta_via_entries(z.sym()) + 0.5 * theta_int;

  // self-overlap-corrected functional route
  const SymMatrix y = lambda + 0.5 * m.grad_xi(z.sym());
  const double rhs = parisi_functional(m, p1, pi, y, quad).value - y.dot(z.sym()) +
                     0.5 * m.xi(z.sym());
  return {lhs, rhs};
}

EquivalenceReport check_equivalence(const MixtureModel& m, const SpinMeasure& p1,
                                    const OptimizerSpec& spec) {
  EquivalenceReport rep;
  const double tol = 2.0 * spec.tol_value;

  rep.pan = free_energy_pan(m, p1, spec).value;
  rep.hj = free_energy_hj(m, p1, spec).value;
  rep.xistar = free_energy_xistar(m, p1, spec).value;
  rep.hopf_half = hopf_value(m, p1, 0.5, SymMatrix(m.dim()), spec).value;

  rep.pan_hj = std::abs(rep.pan - rep.hj) <= tol;
  rep.pan_xistar = std::abs(rep.pan - rep.xistar) <= tol;
  rep.hj_xistar = std::abs(rep.hj - rep.xistar) <= tol;
  rep.hopf_matches_hj = std::abs(rep.hopf_half - rep.hj) <= tol;

  // pinned-endpoint identity on sampled interior hull points (vertices push
  // the inner minimizer norm toward the cap and the classification becomes
  // ill-posed, so the samples stay strictly inside)
  const OverlapHull hull(p1);
  const int nv = static_cast<int>(hull.vertices().size());
  std::vector<SymMatrix> zs;
  {
    std::vector<double> bary(nv, 1.0 / nv);
    zs.push_back(hull.combine(bary));
    if (nv > 1) {
      std::vector<double> lean(nv, 0.25 / (nv - 1));
      lean[0] = 0.75;
      zs.push_back(hull.combine(lean));
      std::mt19937_64 rng(derive_seed(spec.seed, 0xE0, 0));
      std::uniform_real_distribution<double> unif(0.15, 0.85);
      std::vector<double> w(nv);
      double total = 0.0;
      for (double& v : w) total += (v = unif(rng));
      for (double& v : w) v /= total;
      zs.push_back(hull.combine(w));
    }
  }
  for (const auto& z : zs) {
    InnerSolver free_inner(m, p1, spec, YDomain::sym, /*pinned=*/false);
    InnerSolver pin_inner(m, p1, spec, YDomain::sym, /*pinned=*/true);
    EquivalenceRow row(z);
    const PsdMatrix zp(z);
    const auto a = free_inner.solve(z, std::nullopt);
    const auto b = pin_inner.solve(z, zp);
    row.unrestricted = a.finite ? a.value : -std::numeric_limits<double>::infinity();
    row.pinned = b.finite ? b.value : -std::numeric_limits<double>::infinity();
    row.both_diverged = !a.finite && !b.finite;
    row.pass = row.both_diverged || std::abs(row.unrestricted - row.pinned) <= tol;
    rep.endpoint_identity.push_back(std::move(row));
  }

  rep.all_pass = rep.pan_hj && rep.pan_xistar && rep.hj_xistar && rep.hopf_matches_hj;
  for (const auto& row : rep.endpoint_identity) rep.all_pass = rep.all_pass && row.pass;
  return rep;
}

}  // namespace vecspin
