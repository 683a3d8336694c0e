#include "vecspin/finiten.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace vecspin {

namespace {

long ipow(long base, int exp) {
  long r = 1;
  for (int i = 0; i < exp; ++i) r *= base;
  return r;
}

void check_enumeration_guard(int atoms, int n) {
  double total = 1.0;
  for (int i = 0; i < n; ++i) {
    total *= atoms;
    if (total > static_cast<double>(kEnumerationGuard))
      throw std::domain_error(
          "enumerate mode: atoms^N exceeds the enumeration guard; use metropolis");
  }
}

// Streaming log-sum-exp over weighted exponents, and weighted Gibbs
// accumulators for the self-overlap. Base-measure weights are carried
// multiplicatively so the zero-coupling partition sum is exact.
struct GibbsAccumulator {
  explicit GibbsAccumulator(int tri) : overlap_sum(tri, 0.0) {}

  double max_expo = -std::numeric_limits<double>::infinity();
  double zsum = 0.0;                 // sum w exp(E - max)
  std::vector<double> overlap_sum;   // sum w exp(E - max) * gram_upper
  double scalar_sum = 0.0;           // sum w exp(E - max) * scalar observable

  void add(double weight, double expo, const std::vector<double>& gram_upper,
           double scalar) {
    if (expo > max_expo) {
      if (zsum > 0.0) {
        const double r = std::exp(max_expo - expo);
        zsum *= r;
        scalar_sum *= r;
        for (double& v : overlap_sum) v *= r;
      }
      max_expo = expo;
    }
    const double w = weight * std::exp(expo - max_expo);
    zsum += w;
    scalar_sum += w * scalar;
    for (std::size_t k = 0; k < overlap_sum.size(); ++k)
      overlap_sum[k] += w * gram_upper[k];
  }

  double log_z() const {
    return (max_expo == -std::numeric_limits<double>::infinity() ? 0.0 : max_expo) +
           std::log(zsum);
  }
};

// Configuration state with incremental column updates: D x N spins as atom
// digits, the Gram matrix sigma sigma^T, the per-term projections u, and the
// base-measure weight.
struct ConfigState {
  ConfigState(const MixtureModel& m, const SpinMeasure& p1, int n)
      : model(m), measure(p1), n_cols(n), digits(n, 0), gram(m.dim()),
        sigma(Eigen::MatrixXd::Zero(m.dim(), n)) {
    reset_all(0);
  }

  void reset_all(int atom) {
    std::fill(digits.begin(), digits.end(), atom);
    gram = SymMatrix(model.dim());
    const SymMatrix one = SymMatrix::outer(measure.atoms()[atom].tau);
    for (int i = 0; i < n_cols; ++i) {
      gram += one;
      sigma.col(i) = measure.atoms()[atom].tau;
    }
    weight = std::pow(measure.atoms()[atom].weight, n_cols);
  }

  void set_column(int col, int atom) {
    const int old = digits[col];
    if (old == atom) return;
    gram += SymMatrix::outer(measure.atoms()[atom].tau);
    gram -= SymMatrix::outer(measure.atoms()[old].tau);
    sigma.col(col) = measure.atoms()[atom].tau;
    weight *= measure.atoms()[atom].weight / measure.atoms()[old].weight;
    digits[col] = atom;
  }

  // exponent of the Gibbs density relative to the base measure
  double exponent(const DisorderSample& dis, const std::optional<SymMatrix>& x,
                  bool correction) const {
    double e = dis.hamiltonian(sigma);
    if (correction) {
      SymMatrix r = gram;
      r *= 1.0 / n_cols;
      e -= 0.5 * n_cols * model.xi(r);
    }
    if (x) e += x->dot(gram);
    return e;
  }

  const MixtureModel& model;
  const SpinMeasure& measure;
  int n_cols;
  std::vector<int> digits;
  SymMatrix gram;
  Eigen::MatrixXd sigma;  // D x N spin matrix
  double weight = 1.0;
};

// visit every configuration in colexicographic digit order
template <typename Visit>
void enumerate_all(ConfigState& st, Visit&& visit) {
  const int a = st.measure.size();
  st.reset_all(0);
  while (true) {
    visit(st);
    int pos = 0;
    while (pos < st.n_cols) {
      const int next = st.digits[pos] + 1;
      if (next < a) {
        st.set_column(pos, next);
        break;
      }
      st.set_column(pos, 0);
      ++pos;
    }
    if (pos == st.n_cols) break;
  }
}

struct DrawStats {
  double log_z = 0.0;
  SymMatrix mean_overlap;       // Gibbs <sigma sigma^T / N>
  double abs_dev = 0.0;         // Gibbs <|R - ref|> when ref given
  DrawStats(int dim) : mean_overlap(dim) {}
};

DrawStats gibbs_draw_stats(const MixtureModel& m, const SpinMeasure& p1, const GibbsSpec& spec,
                           const DisorderSample& dis, const SymMatrix* ref) {
  const int d = m.dim();
  const int tri = d * (d + 1) / 2;
  DrawStats out(d);

  if (spec.mode == GibbsMode::enumerate_all) {
    check_enumeration_guard(p1.size(), spec.n);
    ConfigState st(m, p1, spec.n);
    GibbsAccumulator acc(tri);
    enumerate_all(st, [&](const ConfigState& s) {
      const double e = s.exponent(dis, spec.x, spec.correction);
      SymMatrix r = s.gram;
      r *= 1.0 / spec.n;
      double dev = 0.0;
      if (ref != nullptr) dev = (r - *ref).norm();
      acc.add(s.weight, e, r.upper(), dev);
    });
    out.log_z = acc.log_z();
    out.mean_overlap = SymMatrix(d, acc.overlap_sum);
    for (int i = 0; i < d; ++i)
      for (int j = i; j < d; ++j) out.mean_overlap.set(i, j, out.mean_overlap(i, j) / acc.zsum);
    out.abs_dev = acc.scalar_sum / acc.zsum;
    return out;
  }

  // Metropolis: single-column resample from P1; base-measure proposal, so the
  // acceptance ratio is exp(Delta E)
  ConfigState st(m, p1, spec.n);
  std::mt19937_64 rng(derive_seed(spec.seed, 0x3E7, 0));
  std::uniform_int_distribution<int> col_pick(0, spec.n - 1);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> cum;
  double c = 0.0;
  for (const auto& a : p1.atoms()) cum.push_back(c += a.weight);
  auto sample_atom = [&]() {
    const double v = unif(rng) * c;
    return static_cast<int>(std::lower_bound(cum.begin(), cum.end(), v) - cum.begin());
  };

  // random initial configuration from the base measure
  for (int i = 0; i < spec.n; ++i) st.set_column(i, sample_atom());

  SymMatrix mean_acc(d);
  double dev_acc = 0.0;
  long kept = 0;
  const long total_sweeps = spec.burn_in + spec.sweeps;
  for (long sweep = 0; sweep < total_sweeps; ++sweep) {
    for (int prop = 0; prop < spec.n; ++prop) {
      const int col = col_pick(rng);
      const int old = st.digits[col];
      const int cand = sample_atom();
      if (cand == old) continue;
      const Eigen::VectorXd dcol = p1.atoms()[cand].tau - p1.atoms()[old].tau;
      double de = dis.hamiltonian_delta(st.sigma, col, dcol);
      SymMatrix gram_new = st.gram;
      gram_new += SymMatrix::outer(p1.atoms()[cand].tau);
      gram_new -= SymMatrix::outer(p1.atoms()[old].tau);
      if (spec.correction) {
        SymMatrix r_new = gram_new, r_old = st.gram;
        r_new *= 1.0 / spec.n;
        r_old *= 1.0 / spec.n;
        de -= 0.5 * spec.n * (m.xi(r_new) - m.xi(r_old));
      }
      if (spec.x) de += spec.x->dot(gram_new - st.gram);
      if (std::log(std::max(1e-300, unif(rng))) <= de) st.set_column(col, cand);
    }
    if (sweep >= spec.burn_in) {
      SymMatrix r = st.gram;
      r *= 1.0 / spec.n;
      mean_acc += r;
      if (ref != nullptr) dev_acc += (r - *ref).norm();
      ++kept;
    }
  }
  out.mean_overlap = mean_acc;
  out.mean_overlap *= 1.0 / kept;
  out.abs_dev = dev_acc / kept;
  out.log_z = std::numeric_limits<double>::quiet_NaN();  // not available by sampling
  return out;
}

}  // namespace

DisorderSample DisorderSample::draw(const MixtureModel& m, int n, uint64_t seed) {
  DisorderSample d;
  d.n_ = n;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (const auto& t : m.terms()) {
    d.degrees_.push_back(t.p);
    d.betas_.push_back(t.beta);
    std::vector<double> g(static_cast<std::size_t>(ipow(n, t.p)));
    for (double& v : g) v = gauss(rng);
    d.tensors_.push_back(std::move(g));
  }
  return d;
}

double DisorderSample::contract(int term, const Eigen::VectorXd& row_vec) const {
  const int p = degrees_[term];
  const std::vector<double>& g = tensors_[term];
  const int n = n_;
  double s = 0.0;
  switch (p) {
    case 1:
      for (int i = 0; i < n; ++i) s += g[i] * row_vec[i];
      break;
    case 2:
      for (int i = 0; i < n; ++i) {
        double row = 0.0;
        for (int j = 0; j < n; ++j) row += g[static_cast<std::size_t>(i) * n + j] * row_vec[j];
        s += row_vec[i] * row;
      }
      break;
    case 3:
      for (int i = 0; i < n; ++i) {
        double slab = 0.0;
        for (int j = 0; j < n; ++j) {
          double row = 0.0;
          const std::size_t base = (static_cast<std::size_t>(i) * n + j) * n;
          for (int k = 0; k < n; ++k) row += g[base + k] * row_vec[k];
          slab += row_vec[j] * row;
        }
        s += row_vec[i] * slab;
      }
      break;
    default: {
      // odometer over p indices
      const std::size_t total = static_cast<std::size_t>(ipow(n, p));
      for (std::size_t flat = 0; flat < total; ++flat) {
        double prod = g[flat];
        std::size_t rem = flat;
        for (int t = p - 1; t >= 0; --t) {
          prod *= row_vec[static_cast<int>(rem % n)];
          rem /= n;
        }
        s += prod;
      }
    }
  }
  return s;
}

double DisorderSample::hamiltonian(const Eigen::MatrixXd& sigma) const {
  double h = 0.0;
  for (int t = 0; t < n_terms(); ++t) {
    const double scale = std::pow(static_cast<double>(n_), -0.5 * (degrees_[t] - 1));
    double term = 0.0;
    for (int k = 0; k < static_cast<int>(betas_[t].size()); ++k) {
      if (betas_[t][k] == 0.0) continue;
      term += betas_[t][k] * contract(t, sigma.row(k).transpose());
    }
    h += scale * term;
  }
  return h;
}

double DisorderSample::hamiltonian_delta(const Eigen::MatrixXd& sigma, int col,
                                         const Eigen::VectorXd& dcol) const {
  double dh = 0.0;
  const int n = n_;
  for (int t = 0; t < n_terms(); ++t) {
    const double scale = std::pow(static_cast<double>(n), -0.5 * (degrees_[t] - 1));
    const std::vector<double>& g = tensors_[t];
    for (int k = 0; k < static_cast<int>(betas_[t].size()); ++k) {
      const double bk = betas_[t][k];
      const double d = dcol[k];
      if (bk == 0.0 || d == 0.0) continue;
      switch (degrees_[t]) {
        case 1:
          dh += scale * bk * g[col] * d;
          break;
        case 2: {
          double row = 0.0, colsum = 0.0;
          for (int j = 0; j < n; ++j) {
            row += g[static_cast<std::size_t>(col) * n + j] * sigma(k, j);
            colsum += g[static_cast<std::size_t>(j) * n + col] * sigma(k, j);
          }
          dh += scale * bk *
                (d * (row + colsum) + d * d * g[static_cast<std::size_t>(col) * n + col]);
          break;
        }
        default: {
          Eigen::VectorXd shifted = sigma.row(k).transpose();
          const double before = contract(t, shifted);
          shifted[col] += d;
          dh += scale * bk * (contract(t, shifted) - before);
        }
      }
    }
  }
  return dh;
}

EvalResult free_energy_finite(const MixtureModel& m, const SpinMeasure& p1,
                              const GibbsSpec& spec, int n_disorder) {
  if (spec.mode != GibbsMode::enumerate_all)
    throw std::domain_error("free_energy_finite: requires enumerate mode");
  if (spec.x && spec.x->dim() != m.dim())
    throw std::invalid_argument("free_energy_finite: field dimension mismatch");
  double sum = 0.0, sumsq = 0.0;
  for (int rep = 0; rep < n_disorder; ++rep) {
    const DisorderSample dis =
        DisorderSample::draw(m, spec.n, derive_seed(spec.seed, 0xD15, rep));
    const DrawStats st = gibbs_draw_stats(m, p1, spec, dis, nullptr);
    const double v = st.log_z / spec.n;
    sum += v;
    sumsq += v * v;
  }
  EvalResult r;
  r.value = sum / n_disorder;
  if (n_disorder > 1) {
    const double var = std::max(0.0, (sumsq - sum * sum / n_disorder) / (n_disorder - 1));
    r.std_error = std::sqrt(var / n_disorder);
  }
  return r;
}

SelfOverlapStats self_overlap_stats(const MixtureModel& m, const SpinMeasure& p1,
                                    const GibbsSpec& spec, int n_disorder) {
  const int d = m.dim();
  SelfOverlapStats out(d);
  out.n_disorder = n_disorder;

  // pass 1: disorder-averaged Gibbs mean of the self-overlap
  std::vector<SymMatrix> means;
  means.reserve(n_disorder);
  for (int rep = 0; rep < n_disorder; ++rep) {
    const DisorderSample dis =
        DisorderSample::draw(m, spec.n, derive_seed(spec.seed, 0xD15, rep));
    means.push_back(gibbs_draw_stats(m, p1, spec, dis, nullptr).mean_overlap);
  }
  SymMatrix mean(d);
  for (const auto& v : means) mean += v;
  mean *= 1.0 / n_disorder;
  out.mean = mean;
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) {
      double ss = 0.0;
      for (const auto& v : means) ss += (v(i, j) - mean(i, j)) * (v(i, j) - mean(i, j));
      out.mean_se.set(i, j, n_disorder > 1 ? std::sqrt(ss / (n_disorder - 1) / n_disorder) : 0.0);
    }

  // pass 2: same disorder seeds, Gibbs average of |R - mean|
  double dev_sum = 0.0, dev_sq = 0.0;
  for (int rep = 0; rep < n_disorder; ++rep) {
    const DisorderSample dis =
        DisorderSample::draw(m, spec.n, derive_seed(spec.seed, 0xD15, rep));
    const double dev = gibbs_draw_stats(m, p1, spec, dis, &mean).abs_dev;
    dev_sum += dev;
    dev_sq += dev * dev;
  }
  out.concentration = dev_sum / n_disorder;
  if (n_disorder > 1) {
    const double var =
        std::max(0.0, (dev_sq - dev_sum * dev_sum / n_disorder) / (n_disorder - 1));
    out.concentration_se = std::sqrt(var / n_disorder);
  }
  return out;
}

std::vector<TrendRow> concentration_trend(const MixtureModel& m, const SpinMeasure& p1,
                                          const std::optional<SymMatrix>& x,
                                          const std::vector<int>& n_list, int n_disorder,
                                          const GibbsSpec& base) {
  std::vector<TrendRow> rows;
  for (int n : n_list) {
    GibbsSpec spec = base;
    spec.n = n;
    spec.x = x;
    const SelfOverlapStats st = self_overlap_stats(m, p1, spec, n_disorder);
    TrendRow row(n, m.dim());
    row.concentration = st.concentration;
    row.std_error = st.concentration_se;
    row.mean = st.mean;
    row.mean_se = st.mean_se;
    rows.push_back(std::move(row));
  }
  return rows;
}

CovarianceReport covariance_selftest(const MixtureModel& m, const SpinMeasure& p1, int n,
                                     int n_pairs, int n_disorder, uint64_t seed) {
  CovarianceReport rep;
  std::mt19937_64 rng(derive_seed(seed, 0xC0F, 0));
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  std::vector<double> cum;
  double c = 0.0;
  for (const auto& a : p1.atoms()) cum.push_back(c += a.weight);
  auto sample_config = [&]() {
    std::vector<int> cfg(n);
    for (int i = 0; i < n; ++i) {
      const double v = unif(rng) * c;
      cfg[i] = static_cast<int>(std::lower_bound(cum.begin(), cum.end(), v) - cum.begin());
    }
    return cfg;
  };
  auto sigma_of = [&](const std::vector<int>& cfg) {
    Eigen::MatrixXd s(m.dim(), n);
    for (int i = 0; i < n; ++i) s.col(i) = p1.atoms()[cfg[i]].tau;
    return s;
  };
  auto dense_overlap = [&](const std::vector<int>& a, const std::vector<int>& b) {
    Eigen::MatrixXd r = Eigen::MatrixXd::Zero(m.dim(), m.dim());
    for (int i = 0; i < n; ++i)
      r += p1.atoms()[a[i]].tau * p1.atoms()[b[i]].tau.transpose();
    return Eigen::MatrixXd(r / n);
  };

  for (int pair = 0; pair < n_pairs; ++pair) {
    const auto cfg1 = sample_config();
    const auto cfg2 = sample_config();
    const Eigen::MatrixXd s1 = sigma_of(cfg1);
    const Eigen::MatrixXd s2 = sigma_of(cfg2);

    double acc = 0.0;
    for (int repd = 0; repd < n_disorder; ++repd) {
      const DisorderSample dis =
          DisorderSample::draw(m, n, derive_seed(seed, 0xC0F1, pair, repd));
      acc += dis.hamiltonian(s1) * dis.hamiltonian(s2);
    }
    CovarianceRow row;
    row.empirical = acc / n_disorder;
    row.target = n * m.xi_dense(dense_overlap(cfg1, cfg2));
    const double v1 = m.xi_dense(dense_overlap(cfg1, cfg1));
    const double v2 = m.xi_dense(dense_overlap(cfg2, cfg2));
    row.scale = n * std::sqrt(std::max(0.0, v1) * std::max(0.0, v2));
    const double band = 4.0 / std::sqrt(static_cast<double>(n_disorder));
    row.pass = std::abs(row.empirical - row.target) <= band * std::max(row.scale, 1e-12);
    rep.all_pass = rep.all_pass && row.pass;
    rep.rows.push_back(row);
  }
  return rep;
}

PottsStructureReport potts_structure_check(int dim, int n) {
  PottsStructureReport rep;
  check_enumeration_guard(dim, n);
  std::vector<int> digits(n, 0);
  while (true) {
    // integer sigma sigma^T from the 0/1 spin matrix
    std::vector<std::vector<long>> gram(dim, std::vector<long>(dim, 0));
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < dim; ++k)
        for (int kp = 0; kp < dim; ++kp)
          gram[k][kp] += static_cast<long>(digits[i] == k) * static_cast<long>(digits[i] == kp);
    long trace = 0;
    for (int k = 0; k < dim; ++k) {
      trace += gram[k][k];
      for (int kp = 0; kp < dim; ++kp)
        if (k != kp && gram[k][kp] != 0) rep.diagonal = false;
    }
    if (trace != n) rep.trace_n = false;
    ++rep.configs_checked;

    int pos = 0;
    while (pos < n && ++digits[pos] == dim) digits[pos++] = 0;
    if (pos == n) break;
  }
  return rep;
}

}  // namespace vecspin
