#include "vecspin/functional.hpp"

#include "functional_detail.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace vecspin {

namespace {

using detail::LevelData;
using detail::Prepared;
using detail::leaf_value;
using detail::leaf_value_grad;
using detail::prepare;

constexpr double kGuardLeaves = 1e7;

// ---------------------------------------------------------------------------
// Gauss-Hermite evaluation

class GhEvaluator {
 public:
  GhEvaluator(const Prepared& pr, int nodes, bool with_grad)
      : pr_(pr), rule_(gauss_hermite(nodes)), with_grad_(with_grad) {
    double leaves = 1.0;
    for (const auto& lv : pr.levels) leaves *= std::pow(static_cast<double>(nodes), lv.rank);
    if (leaves > kGuardLeaves)
      throw std::domain_error(
          "gauss-hermite guard: tensor node count exceeds 1e7; use monte-carlo mode");
    expo_.assign(pr.levels.size() + 1, std::vector<double>(pr.n_atoms));
    grad_.assign(pr.levels.size() + 1, std::vector<double>(pr.tri));
  }

  double run(const std::vector<double>& base, std::vector<double>* grad_out) {
    expo_[0] = base;
    const double y = eval(0, grad_out ? &grad_[0] : nullptr);
    if (grad_out) *grad_out = grad_[0];
    return y;
  }

 private:
  double eval(std::size_t l, std::vector<double>* grad) {
    if (l == pr_.levels.size())
      return grad ? leaf_value_grad(pr_, expo_[l], *grad) : leaf_value(pr_, expo_[l]);

    const LevelData& lv = pr_.levels[l];
    const int n = static_cast<int>(rule_.nodes.size());
    std::vector<int> digit(std::max(1, lv.rank), 0);
    const long combos = static_cast<long>(std::pow(static_cast<double>(n), lv.rank));

    const double param = lv.param;
    double acc_plain = 0.0;                                   // param == 0
    double mx = -std::numeric_limits<double>::infinity();     // param > 0 (streaming LSE)
    double acc_exp = 0.0;
    std::vector<double> acc_grad(pr_.tri, 0.0);

    for (long c = 0; c < combos; ++c) {
      double w = 1.0;
      for (int t = 0; t < lv.rank; ++t) w *= rule_.weights[digit[t]];
      // child exponents
      auto& child = expo_[l + 1];
      child = expo_[l];
      for (int t = 0; t < lv.rank; ++t) {
        const double g = rule_.nodes[digit[t]];
        for (int i = 0; i < pr_.n_atoms; ++i) child[i] += g * lv.proj(t, i);
      }
      std::vector<double>* child_grad = grad ? &grad_[l + 1] : nullptr;
      const double y = eval(l + 1, child_grad);

      if (param == 0.0) {
        acc_plain += w * y;
        if (grad)
          for (int k = 0; k < pr_.tri; ++k) acc_grad[k] += w * (*child_grad)[k];
      } else {
        const double term = std::log(w) + param * y;
        if (term > mx) {
          const double r = std::exp(mx - term);
          acc_exp *= r;
          if (grad)
            for (double& g : acc_grad) g *= r;
          mx = term;
        }
        const double e = std::exp(term - mx);
        acc_exp += e;
        if (grad)
          for (int k = 0; k < pr_.tri; ++k) acc_grad[k] += e * (*child_grad)[k];
      }

      // odometer
      for (int t = 0; t < lv.rank; ++t) {
        if (++digit[t] < n) break;
        digit[t] = 0;
      }
    }

    if (param == 0.0) {
      if (grad) *grad = acc_grad;
      return acc_plain;
    }
    if (grad)
      for (int k = 0; k < pr_.tri; ++k) (*grad)[k] = acc_grad[k] / acc_exp;
    return (mx + std::log(acc_exp)) / param;
  }

  const Prepared& pr_;
  GaussHermiteRule rule_;
  bool with_grad_;
  std::vector<std::vector<double>> expo_;
  std::vector<std::vector<double>> grad_;
};

// ---------------------------------------------------------------------------
// Monte-Carlo evaluation: replicas over the outermost (parameter-0) level,
// nested sampling with jackknife-corrected log-mean-exp at inner levels,
// counter-derived streams so results are independent of scheduling.

struct McPlan {
  long outer = 0;
  std::vector<long> inner;  // per level >= 1
};

McPlan plan_mc(const Prepared& pr, long budget) {
  McPlan plan;
  const int q = static_cast<int>(pr.levels.size()) - 1;
  if (q <= 0) {
    plan.outer = std::max<long>(16, budget);
    return plan;
  }
  const double target_outer = 240.0;
  long s = static_cast<long>(std::pow(static_cast<double>(budget) / target_outer, 1.0 / q));
  s = std::clamp<long>(s, 48, 768);
  long prod = 1;
  for (int i = 0; i < q; ++i) {
    plan.inner.push_back(s);
    prod *= s;
  }
  plan.outer = std::max<long>(96, budget / prod);
  return plan;
}

void draw_normals(uint64_t stream, int count, double sign, std::vector<double>& out) {
  out.resize(count);
  std::mt19937_64 rng(stream);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int t = 0; t < count; ++t) out[t] = sign * gauss(rng);
}

class McEvaluator {
 public:
  McEvaluator(const Prepared& pr, const QuadratureSpec& quad, bool with_grad)
      : pr_(pr), quad_(quad), plan_(plan_mc(pr, quad.mc_samples)), with_grad_(with_grad) {}

  EvalResult run(const std::vector<double>& base, std::vector<double>* grad_out) {
    const bool anti = quad_.antithetic;
    const long pairs = anti ? (plan_.outer + 1) / 2 : plan_.outer;
    double sum = 0.0, sumsq = 0.0;
    std::vector<double> gsum(pr_.tri, 0.0), g1(pr_.tri), g2(pr_.tri);
    std::vector<double> expo(pr_.n_atoms), draws;

    for (long p = 0; p < pairs; ++p) {
      double val = 0.0;
      const int reps = anti ? 2 : 1;
      for (int a = 0; a < reps; ++a) {
        const double sign = (a == 0) ? 1.0 : -1.0;
        expo = base;
        if (!pr_.levels.empty()) {
          const LevelData& lv0 = pr_.levels[0];
          draw_normals(derive_seed(quad_.seed, 1, static_cast<uint64_t>(p)), lv0.rank, sign,
                       draws);
          for (int t = 0; t < lv0.rank; ++t)
            for (int i = 0; i < pr_.n_atoms; ++i) expo[i] += draws[t] * lv0.proj(t, i);
        }
        std::vector<double>* g = with_grad_ ? (a == 0 ? &g1 : &g2) : nullptr;
        val += eval(1, expo, derive_seed(quad_.seed, 2, static_cast<uint64_t>(p)), g);
      }
      val /= reps;
      sum += val;
      sumsq += val * val;
      if (with_grad_)
        for (int k = 0; k < pr_.tri; ++k)
          gsum[k] += (reps == 2 ? 0.5 * (g1[k] + g2[k]) : g1[k]);
    }

    EvalResult r;
    r.value = sum / pairs;
    if (pairs > 1) {
      const double var = std::max(0.0, (sumsq - sum * sum / pairs) / (pairs - 1));
      r.std_error = std::sqrt(var / pairs);
    }
    if (grad_out)
      for (int k = 0; k < pr_.tri; ++k) (*grad_out)[k] = gsum[k] / pairs;
    return r;
  }

 private:
  double eval(std::size_t l, const std::vector<double>& expo, uint64_t stream,
              std::vector<double>* grad) {
    if (l == pr_.levels.size())
      return grad ? leaf_value_grad(pr_, expo, *grad) : leaf_value(pr_, expo);

    const LevelData& lv = pr_.levels[l];
    const long s = plan_.inner[l - 1];
    const double param = lv.param;

    std::vector<double> ys(s);
    std::vector<std::vector<double>> gs;
    if (grad) gs.assign(s, std::vector<double>(pr_.tri));
    std::vector<double> child(pr_.n_atoms), draws;
    for (long i = 0; i < s; ++i) {
      draw_normals(derive_seed(stream, l, static_cast<uint64_t>(i)), lv.rank, 1.0, draws);
      child = expo;
      for (int t = 0; t < lv.rank; ++t)
        for (int k = 0; k < pr_.n_atoms; ++k) child[k] += draws[t] * lv.proj(t, k);
      ys[i] = eval(l + 1, child, derive_seed(stream, 101 + l, static_cast<uint64_t>(i)),
                   grad ? &gs[i] : nullptr);
    }

    if (param == 0.0) {
      double m = 0.0;
      for (double y : ys) m += y;
      if (grad) {
        std::fill(grad->begin(), grad->end(), 0.0);
        for (long i = 0; i < s; ++i)
          for (int k = 0; k < pr_.tri; ++k) (*grad)[k] += gs[i][k];
        for (double& g : *grad) g /= s;
      }
      return m / s;
    }

    // (1/param) log mean exp(param y), jackknife-corrected for the O(1/s) bias
    double mx = -std::numeric_limits<double>::infinity();
    for (double y : ys) mx = std::max(mx, param * y);
    std::vector<double> t(s);
    double total = 0.0;
    for (long i = 0; i < s; ++i) {
      t[i] = std::exp(param * ys[i] - mx);
      total += t[i];
    }
    const double naive = (mx + std::log(total / s)) / param;
    double jk = 0.0;
    for (long i = 0; i < s; ++i)
      jk += (mx + std::log(std::max(1e-300, (total - t[i]) / (s - 1)))) / param;
    jk /= s;
    const double corrected = s * naive - (s - 1) * jk;

    if (grad) {
      std::fill(grad->begin(), grad->end(), 0.0);
      for (long i = 0; i < s; ++i)
        for (int k = 0; k < pr_.tri; ++k) (*grad)[k] += t[i] * gs[i][k];
      for (double& g : *grad) g /= total;
    }
    return corrected;
  }

  const Prepared& pr_;
  const QuadratureSpec& quad_;
  McPlan plan_;
  bool with_grad_;
};

EvalResult evaluate(const Prepared& pr, const QuadratureSpec& quad,
                    std::vector<double>* grad_out) {
  EvalResult r;
  if (quad.mode == QuadMode::gauss_hermite) {
    GhEvaluator ev(pr, quad.gh_nodes, grad_out != nullptr);
    r.value = ev.run(pr.base_expo, grad_out);
    r.std_error = 0.0;
  } else {
    McEvaluator ev(pr, quad, grad_out != nullptr);
    r = ev.run(pr.base_expo, grad_out);
  }
  for (const auto& lv : pr.levels) r.level_increment_norms.push_back(lv.inc_norm);
  return r;
}

SymMatrix from_upper(int dim, const std::vector<double>& upper) {
  return SymMatrix(dim, upper);
}

}  // namespace

EvalResult rpc_log_moment(const MixtureModel& m, const SpinMeasure& p1, const StepPath& pi,
                          const SymMatrix& field, const QuadratureSpec& quad) {
  const Prepared pr = prepare(m, p1, pi, field);
  return evaluate(pr, quad, nullptr);
}

double theta_path_integral(const MixtureModel& m, const StepPath& pi) {
  double s = 0.0;
  for (int j = 0; j < pi.levels(); ++j) s += m.theta(pi.value(j).sym()) * pi.width(j);
  return s;
}

EvalResult parisi_functional(const MixtureModel& m, const SpinMeasure& p1, const StepPath& pi,
                             const SymMatrix& x, const QuadratureSpec& quad) {
  const SymMatrix field = x - 0.5 * m.grad_xi(pi.endpoint().sym());
  EvalResult r = rpc_log_moment(m, p1, pi, field, quad);
  r.value += 0.5 * theta_path_integral(m, pi);
  return r;
}

GradientResult functional_gradient_x(const MixtureModel& m, const SpinMeasure& p1,
                                     const StepPath& pi, const SymMatrix& x,
                                     const QuadratureSpec& quad) {
  const SymMatrix field = x - 0.5 * m.grad_xi(pi.endpoint().sym());
  const Prepared pr = prepare(m, p1, pi, field);
  std::vector<double> grad(pr.tri, 0.0);
  EvalResult r = evaluate(pr, quad, &grad);
  r.value += 0.5 * theta_path_integral(m, pi);
  return GradientResult(from_upper(m.dim(), grad), std::move(r));
}

SymMatrix functional_gradient_fd(const MixtureModel& m, const SpinMeasure& p1,
                                 const StepPath& pi, const SymMatrix& x,
                                 const QuadratureSpec& quad, double step) {
  const int d = m.dim();
  SymMatrix g(d);
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) {
      SymMatrix basis(d);
      basis.set(i, j, 1.0);
      // entrywise inner product: a step along the (i,j) basis moves the dot
      // by 2h off the diagonal
      const double denom = (i == j) ? 1.0 : 2.0;
      const SymMatrix xp = x + step * basis;
      const SymMatrix xm = x - step * basis;
      const double fp = parisi_functional(m, p1, pi, xp, quad).value;
      const double fm = parisi_functional(m, p1, pi, xm, quad).value;
      g.set(i, j, (fp - fm) / (2.0 * step) / denom);
    }
  return g;
}

double lipschitz_path_bound(const MixtureModel& m, const StepPath& pi, const StepPath& pi2) {
  if (pi.dim() != pi2.dim())
    throw std::invalid_argument("lipschitz_path_bound: dimension mismatch");
  std::vector<double> cuts(pi.grid());
  cuts.insert(cuts.end(), pi2.grid().begin(), pi2.grid().end());
  std::sort(cuts.begin(), cuts.end());
  double total = 0.0, prev = 0.0;
  for (double c : cuts) {
    if (c <= prev) continue;
    const double mid = 0.5 * (prev + c);
    const SymMatrix a = pi.at(mid).sym();
    const SymMatrix b = pi2.at(mid).sym();
    const double gdiff = (m.grad_xi(a) - m.grad_xi(b)).norm();
    const double tdiff = std::abs(m.theta(a) - m.theta(b));
    total += 0.5 * (gdiff + tdiff) * (c - prev);
    prev = c;
  }
  return total;
}

}  // namespace vecspin
