#pragma once

// Finite-N vector spin glass simulator with self-overlap correction:
// disorder sampling, exact-enumeration and Metropolis Gibbs measures, free
// energy, and self-overlap statistics.

#include "vecspin/model.hpp"
#include "vecspin/quadrature.hpp"
#include "vecspin/symcone.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace vecspin {

/// Per-term Gaussian coupling tensors. The Hamiltonian is
///   H_N(sigma) = sum_p N^{-(p-1)/2} sum_{i_1..i_p} g^p_{i_1..i_p}
///                  sum_k beta_p(k) sigma_{k,i_1} ... sigma_{k,i_p},
/// i.e. each tensor contracts against every spin row, which reproduces the
/// covariance N xi(sigma sigma'^T / N) of the mixture model.
class DisorderSample {
 public:
  static DisorderSample draw(const MixtureModel& m, int n, uint64_t seed);

  int n() const { return n_; }
  int n_terms() const { return static_cast<int>(degrees_.size()); }

  /// H for a D x N configuration matrix.
  double hamiltonian(const Eigen::MatrixXd& sigma) const;

  /// Change in H when column `col` shifts by the D-vector `dcol`.
  double hamiltonian_delta(const Eigen::MatrixXd& sigma, int col,
                           const Eigen::VectorXd& dcol) const;

 private:
  double contract(int term, const Eigen::VectorXd& row) const;

  int n_ = 0;
  std::vector<int> degrees_;
  std::vector<std::vector<double>> betas_;
  std::vector<std::vector<double>> tensors_;  // flat, size n^p per term
};

enum class GibbsMode { enumerate_all, metropolis };

struct GibbsSpec {
  GibbsMode mode = GibbsMode::enumerate_all;
  int n = 6;
  std::optional<SymMatrix> x;  // external field, zero when absent
  bool correction = true;      // subtract (N/2) xi(self-overlap)
  long sweeps = 5000;
  long burn_in = 1000;
  uint64_t seed = 1;
};

// enumerate mode requires atoms^N at most this
inline constexpr long kEnumerationGuard = 2'000'000;

/// Disorder-averaged free energy (1/N) E log Z, enumerate mode only.
EvalResult free_energy_finite(const MixtureModel& m, const SpinMeasure& p1,
                              const GibbsSpec& spec, int n_disorder);

struct SelfOverlapStats {
  SymMatrix mean;            // E < sigma sigma^T / N >
  SymMatrix mean_se;         // entrywise standard error over disorder
  double concentration;      // E < | sigma sigma^T / N - mean | >
  double concentration_se;
  int n_disorder;
  SelfOverlapStats(int dim) : mean(dim), mean_se(dim), concentration(0), concentration_se(0), n_disorder(0) {}
};

SelfOverlapStats self_overlap_stats(const MixtureModel& m, const SpinMeasure& p1,
                                    const GibbsSpec& spec, int n_disorder);

struct TrendRow {
  int n;
  double concentration;
  double std_error;
  SymMatrix mean;
  SymMatrix mean_se;
  TrendRow(int nn, int dim)
      : n(nn), concentration(0), std_error(0), mean(dim), mean_se(dim) {}
};

/// Concentration per N; Theorem-style trend data.
std::vector<TrendRow> concentration_trend(const MixtureModel& m, const SpinMeasure& p1,
                                          const std::optional<SymMatrix>& x,
                                          const std::vector<int>& n_list, int n_disorder,
                                          const GibbsSpec& base);

struct CovarianceRow {
  double target;     // N xi(sigma sigma'^T / N)
  double empirical;  // mean of H(sigma) H(sigma') over disorder
  double scale;      // N sqrt(xi(R11) xi(R22)), the natural magnitude
  bool pass;
};

struct CovarianceReport {
  std::vector<CovarianceRow> rows;
  bool all_pass = true;
};

/// Validates the disorder construction: empirical covariance of H over fresh
/// disorder matches N xi(sigma sigma'^T / N) within 4/sqrt(n_disorder)
/// relative to the natural scale.
CovarianceReport covariance_selftest(const MixtureModel& m, const SpinMeasure& p1, int n,
                                     int n_pairs, int n_disorder, uint64_t seed);

struct PottsStructureReport {
  bool diagonal = true;   // (sigma sigma^T)_{kk'} = 0 for k != k', exactly
  bool trace_n = true;    // tr(sigma sigma^T) = N, exactly
  long configs_checked = 0;
};

/// Integer-arithmetic check of the Potts self-overlap structure over all
/// D^n configurations.
PottsStructureReport potts_structure_check(int dim, int n);

}  // namespace vecspin
