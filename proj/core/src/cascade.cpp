#include "vecspin/functional.hpp"

#include "functional_detail.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace vecspin {

namespace {

using detail::Prepared;

// Top-K points of a Poisson process with intensity x t^{-x-1} dt, descending:
// u_k = Gamma_k^{-1/x} for cumulative sums Gamma_k of unit exponentials.
void draw_pd_log_weights(double x, int k, std::mt19937_64& rng, std::vector<double>& logw) {
  std::exponential_distribution<double> expo(1.0);
  logw.resize(k);
  double gamma = 0.0;
  for (int i = 0; i < k; ++i) {
    gamma += expo(rng);
    logw[i] = -std::log(gamma) / x;
  }
}

}  // namespace

CascadeResult parisi_functional_cascade_oracle(const MixtureModel& m, const SpinMeasure& p1,
                                               const StepPath& pi, const SymMatrix& x,
                                               const CascadeSpec& spec) {
  if (spec.top_k < 2 || spec.top_k > 5000)
    throw std::invalid_argument("cascade oracle: top_k must be in [2, 5000]");
  const SymMatrix field = x - 0.5 * m.grad_xi(pi.endpoint().sym());
  const Prepared pr = detail::prepare(m, p1, pi, field);

  const int n_levels = static_cast<int>(pr.levels.size());
  int branching = 0;
  double leaves = 1.0;
  for (int l = 1; l < n_levels; ++l) {
    ++branching;
    leaves *= spec.top_k;
  }
  if (leaves > 1e6)
    throw std::domain_error("cascade oracle: truncated tree too large (reduce levels or K)");

  const long k = spec.top_k;
  const double theta_half = 0.5 * theta_path_integral(m, pi);

  double sum = 0.0, sumsq = 0.0;
  double tail_acc = 0.0;
  long tail_count = 0;

  // per-node state: log cascade weight and per-atom exponent
  std::vector<std::vector<double>> expos, next_expos;
  std::vector<double> logw, next_logw, pd, draws;

  for (long rep = 0; rep < spec.replicas; ++rep) {
    std::mt19937_64 rng(derive_seed(spec.seed, 7, static_cast<uint64_t>(rep)));
    std::normal_distribution<double> gauss(0.0, 1.0);

    expos.assign(1, pr.base_expo);
    logw.assign(1, 0.0);
    for (int l = 0; l < n_levels; ++l) {
      const auto& lv = pr.levels[l];
      if (l == 0 || lv.param <= 0.0) {
        // parameter 0: a single child per node carrying the level increment
        for (auto& e : expos) {
          for (int t = 0; t < lv.rank; ++t) {
            const double g = gauss(rng);
            for (int i = 0; i < pr.n_atoms; ++i) e[i] += g * lv.proj(t, i);
          }
        }
        continue;
      }
      next_expos.clear();
      next_logw.clear();
      next_expos.reserve(expos.size() * k);
      next_logw.reserve(expos.size() * k);
      for (std::size_t node = 0; node < expos.size(); ++node) {
        draw_pd_log_weights(lv.param, static_cast<int>(k), rng, pd);
        // truncation diagnostic: estimated relative tail mass of the PD sum
        double wmax = pd[0];
        double wsum = 0.0;
        for (double lw : pd) wsum += std::exp(lw - wmax);
        const double tail =
            static_cast<double>(k) * std::exp(pd[k - 1] - wmax) / ((1.0 / lv.param - 1.0) * wsum);
        tail_acc += tail;
        ++tail_count;
        for (long c = 0; c < k; ++c) {
          next_logw.push_back(logw[node] + pd[c]);
          next_expos.push_back(expos[node]);
          auto& e = next_expos.back();
          draws.resize(lv.rank);
          for (int t = 0; t < lv.rank; ++t) draws[t] = gauss(rng);
          for (int t = 0; t < lv.rank; ++t)
            for (int i = 0; i < pr.n_atoms; ++i) e[i] += draws[t] * lv.proj(t, i);
        }
      }
      expos.swap(next_expos);
      logw.swap(next_logw);
    }

    // log of ( sum_leaf W exp(leaf) / sum_leaf W )
    double mx_num = -std::numeric_limits<double>::infinity();
    double mx_den = -std::numeric_limits<double>::infinity();
    std::vector<double> leafvals(expos.size());
    for (std::size_t n = 0; n < expos.size(); ++n) {
      leafvals[n] = detail::leaf_value(pr, expos[n]);
      mx_num = std::max(mx_num, logw[n] + leafvals[n]);
      mx_den = std::max(mx_den, logw[n]);
    }
    double num = 0.0, den = 0.0;
    for (std::size_t n = 0; n < expos.size(); ++n) {
      num += std::exp(logw[n] + leafvals[n] - mx_num);
      den += std::exp(logw[n] - mx_den);
    }
    const double v = (mx_num + std::log(num)) - (mx_den + std::log(den)) + theta_half;
    sum += v;
    sumsq += v * v;
  }

  CascadeResult res;
  res.estimate.value = sum / spec.replicas;
  if (spec.replicas > 1) {
    const double var =
        std::max(0.0, (sumsq - sum * sum / spec.replicas) / (spec.replicas - 1));
    res.estimate.std_error = std::sqrt(var / spec.replicas);
  }
  for (const auto& lv : pr.levels) res.estimate.level_increment_norms.push_back(lv.inc_norm);
  res.tail_mass = tail_count > 0 ? tail_acc / tail_count : 0.0;
  res.truncation_flagged = res.tail_mass > 1e-3;
  (void)branching;
  return res;
}

}  // namespace vecspin
