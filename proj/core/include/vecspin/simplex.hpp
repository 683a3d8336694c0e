#pragma once

// Nelder-Mead simplex minimizer with adaptive coefficients. Objectives here
// are cheap-but-noisy black boxes over unconstrained parametrizations, so a
// derivative-free method with common random numbers is the workhorse.

#include <functional>
#include <vector>

namespace vecspin {

struct SimplexOptions {
  long max_evals = 2000;
  double ftol = 1e-10;     // absolute spread of simplex values
  double xtol = 1e-9;      // simplex diameter
  double init_step = 0.3;  // initial vertex displacement per coordinate
};

struct SimplexResult {
  std::vector<double> x;
  double value = 0.0;
  long evals = 0;
  bool converged = false;
};

SimplexResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                          std::vector<double> x0, const SimplexOptions& opts = {});

}  // namespace vecspin
