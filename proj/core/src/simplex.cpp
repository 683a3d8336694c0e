#include "vecspin/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace vecspin {

SimplexResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                          std::vector<double> x0, const SimplexOptions& opts) {
  const int n = static_cast<int>(x0.size());
  SimplexResult res;
  if (n == 0) {
    res.x = x0;
    res.value = f(x0);
    res.evals = 1;
    res.converged = true;
    return res;
  }

  // adaptive coefficients (Gao & Han)
  const double alpha = 1.0;
  const double beta = 1.0 + 2.0 / n;
  const double gamma = 0.75 - 0.5 / n;
  const double delta = 1.0 - 1.0 / n;

  long evals = 0;
  auto eval = [&](const std::vector<double>& x) {
    ++evals;
    const double v = f(x);
    return std::isfinite(v) ? v : 1e100;
  };

  std::vector<std::vector<double>> xs(n + 1, x0);
  std::vector<double> fs(n + 1);
  for (int i = 1; i <= n; ++i) xs[i][i - 1] += opts.init_step;
  for (int i = 0; i <= n; ++i) fs[i] = eval(xs[i]);

  std::vector<int> order(n + 1);
  auto sort_simplex = [&]() {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return fs[a] < fs[b]; });
  };

  std::vector<double> centroid(n), xr(n), xe(n), xc(n);
  while (evals < opts.max_evals) {
    sort_simplex();
    const int best = order[0], worst = order[n], second = order[n - 1];

    double spread = 0.0, diam = 0.0;
    for (int i = 0; i <= n; ++i) spread = std::max(spread, std::abs(fs[i] - fs[best]));
    for (int k = 0; k < n; ++k)
      diam = std::max(diam, std::abs(xs[worst][k] - xs[best][k]));
    if (spread < opts.ftol && diam < opts.xtol) {
      res.converged = true;
      break;
    }

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (int i = 0; i <= n; ++i)
      if (i != worst)
        for (int k = 0; k < n; ++k) centroid[k] += xs[i][k] / n;

    for (int k = 0; k < n; ++k) xr[k] = centroid[k] + alpha * (centroid[k] - xs[worst][k]);
    const double fr = eval(xr);

    if (fr < fs[best]) {
      for (int k = 0; k < n; ++k) xe[k] = centroid[k] + beta * (xr[k] - centroid[k]);
      const double fe = eval(xe);
      if (fe < fr) {
        xs[worst] = xe;
        fs[worst] = fe;
      } else {
        xs[worst] = xr;
        fs[worst] = fr;
      }
    } else if (fr < fs[second]) {
      xs[worst] = xr;
      fs[worst] = fr;
    } else {
      const bool outside = fr < fs[worst];
      if (outside) {
        for (int k = 0; k < n; ++k) xc[k] = centroid[k] + gamma * (xr[k] - centroid[k]);
      } else {
        for (int k = 0; k < n; ++k) xc[k] = centroid[k] - gamma * (xr[k] - centroid[k]);
      }
      const double fc = eval(xc);
      if (fc < std::min(fr, fs[worst])) {
        xs[worst] = xc;
        fs[worst] = fc;
      } else {
        // shrink toward best
        for (int i = 0; i <= n; ++i) {
          if (i == best) continue;
          for (int k = 0; k < n; ++k)
            xs[i][k] = xs[best][k] + delta * (xs[i][k] - xs[best][k]);
          fs[i] = eval(xs[i]);
        }
      }
    }
  }

  sort_simplex();
  res.x = xs[order[0]];
  res.value = fs[order[0]];
  res.evals = evals;
  return res;
}

}  // namespace vecspin
