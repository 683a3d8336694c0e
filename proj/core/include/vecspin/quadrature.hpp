#pragma once

// How nested Gaussian expectations are realized: deterministic Gauss-Hermite
// tensor rules or seeded Monte Carlo with common random numbers.

#include <cstdint>
#include <string>
#include <vector>

namespace vecspin {

enum class QuadMode { gauss_hermite, monte_carlo };

struct QuadratureSpec {
  QuadMode mode = QuadMode::gauss_hermite;
  int gh_nodes = 20;
  long mc_samples = 100000;
  uint64_t seed = 1;
  bool antithetic = true;
};

struct EvalResult {
  double value = 0.0;
  double std_error = 0.0;  // 0 in gauss-hermite mode
  std::vector<double> level_increment_norms;
};

/// Nodes and weights for E f(g), g standard normal; weights sum to 1.
struct GaussHermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
GaussHermiteRule gauss_hermite(int n);

/// splitmix64 step, the seed-derivation primitive.
uint64_t splitmix64(uint64_t& state);
/// Deterministic stream seed from a base seed and a stream label chain.
uint64_t derive_seed(uint64_t base, uint64_t a, uint64_t b = 0, uint64_t c = 0);

}  // namespace vecspin
