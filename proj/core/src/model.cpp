#include "vecspin/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace vecspin {

namespace {

double pow_int(double x, int p) {
  double r = 1.0;
  for (int i = 0; i < p; ++i) r *= x;
  return r;
}

}  // namespace

MixtureModel::MixtureModel(int dim, std::vector<MixtureTerm> terms)
    : dim_(dim), terms_(std::move(terms)) {
  if (dim < 1) throw std::invalid_argument("MixtureModel: dim must be positive");
  for (const auto& t : terms_) {
    if (t.p < 1) throw std::invalid_argument("MixtureModel: p must be >= 1");
    if (t.beta.size() != static_cast<std::size_t>(dim))
      throw std::invalid_argument("MixtureModel: beta length mismatch");
  }
}

double MixtureModel::xi(const SymMatrix& a) const {
  if (a.dim() != dim_) throw std::invalid_argument("xi: dimension mismatch");
  double s = 0.0;
  for (const auto& t : terms_)
    for (int k = 0; k < dim_; ++k)
      for (int kp = 0; kp < dim_; ++kp)
        s += t.beta[k] * t.beta[kp] * pow_int(a(k, kp), t.p);
  return s;
}

double MixtureModel::xi_dense(const Eigen::MatrixXd& a) const {
  if (a.rows() != dim_ || a.cols() != dim_)
    throw std::invalid_argument("xi_dense: dimension mismatch");
  double s = 0.0;
  for (const auto& t : terms_)
    for (int k = 0; k < dim_; ++k)
      for (int kp = 0; kp < dim_; ++kp)
        s += t.beta[k] * t.beta[kp] * pow_int(a(k, kp), t.p);
  return s;
}

SymMatrix MixtureModel::grad_xi(const SymMatrix& a) const {
  if (a.dim() != dim_) throw std::invalid_argument("grad_xi: dimension mismatch");
  SymMatrix g(dim_);
  for (int k = 0; k < dim_; ++k)
    for (int kp = k; kp < dim_; ++kp) {
      double s = 0.0;
      for (const auto& t : terms_)
        s += t.p * t.beta[k] * t.beta[kp] * pow_int(a(k, kp), t.p - 1);
      g.set(k, kp, s);
    }
  return g;
}

double MixtureModel::theta(const SymMatrix& a) const {
  return a.dot(grad_xi(a)) - xi(a);
}

double MixtureModel::xi_entry(int k, int kp, double t) const {
  double s = 0.0;
  for (const auto& term : terms_) s += term.beta[k] * term.beta[kp] * pow_int(t, term.p);
  return s;
}

SymMatrix MixtureModel::theta_entrywise(const SymMatrix& a) const {
  SymMatrix th(dim_);
  for (int k = 0; k < dim_; ++k)
    for (int kp = k; kp < dim_; ++kp) {
      const double t = a(k, kp);
      double deriv = 0.0;
      for (const auto& term : terms_)
        deriv += term.p * term.beta[k] * term.beta[kp] * pow_int(t, term.p - 1);
      th.set(k, kp, t * deriv - xi_entry(k, kp, t));
    }
  return th;
}

bool MixtureModel::symmetric() const {
  for (const auto& t : terms_)
    for (int k = 1; k < dim_; ++k)
      if (t.beta[k] != t.beta[0]) return false;
  return true;
}

XiStarResult xi_star(const MixtureModel& m, const SymMatrix& y, const XiStarSpec& spec) {
  const int d = m.dim();
  if (y.dim() != d) throw std::invalid_argument("xi_star: dimension mismatch");
  const int ncoef = d * (d + 1) / 2;

  auto z_of = [&](const std::vector<double>& l) {
    Eigen::MatrixXd lm = Eigen::MatrixXd::Zero(d, d);
    int k = 0;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j <= i; ++j) lm(i, j) = l[k++];
    return SymMatrix::from_dense(lm * lm.transpose(), 1.0);
  };
  auto objective = [&](const std::vector<double>& l) {
    const SymMatrix z = z_of(l);
    return z.dot(y) - m.xi(z);
  };

  // 1-D golden-section maximization with an expanding bracket.
  auto line_max = [&](std::vector<double> l, int coord, double& best_val) {
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    const double base = l[coord];
    double width = 0.5;
    double lo = base - width, hi = base + width;
    auto feval = [&](double v) {
      l[coord] = v;
      return objective(l);
    };
    // expand while an endpoint beats the center
    for (int it = 0; it < 40; ++it) {
      const double fc = feval(base);
      if (feval(lo) > fc || feval(hi) > fc) {
        width *= 2.0;
        lo = base - width;
        hi = base + width;
        if (width > 64.0) break;
      } else {
        break;
      }
    }
    double a = lo, b = hi;
    double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
    double f1 = feval(x1), f2 = feval(x2);
    for (int it = 0; it < 60; ++it) {
      if (f1 < f2) {
        a = x1;
        x1 = x2;
        f1 = f2;
        x2 = a + phi * (b - a);
        f2 = feval(x2);
      } else {
        b = x2;
        x2 = x1;
        f2 = f1;
        x1 = b - phi * (b - a);
        f1 = feval(x1);
      }
    }
    const double xm = 0.5 * (a + b);
    const double fm = feval(xm);
    if (fm >= best_val) {
      best_val = fm;
      l[coord] = xm;
    } else {
      l[coord] = base;
    }
    return l;
  };

  XiStarResult best;
  best.value = -std::numeric_limits<double>::infinity();
  best.maximizer = SymMatrix(d);

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 0.5);
  for (int start = 0; start < spec.restarts; ++start) {
    std::vector<double> l(ncoef, 0.0);
    if (start > 0)
      for (double& v : l) v = gauss(rng);
    double val = objective(l);
    for (int sweep = 0; sweep < spec.sweeps; ++sweep) {
      const double before = val;
      for (int c = 0; c < ncoef; ++c) l = line_max(l, c, val);
      if (z_of(l).norm() > spec.norm_cap) {
        best.diverged = true;
        best.value = val;
        best.maximizer = z_of(l);
        return best;
      }
      if (val - before < 1e-13 * (1.0 + std::abs(val))) break;
    }
    if (val > best.value) {
      best.value = val;
      best.maximizer = z_of(l);
    }
  }
  return best;
}

HypothesisReport validate_hypotheses(const MixtureModel& m, int samples, uint64_t seed) {
  HypothesisReport rep;
  std::mt19937_64 rng(seed);
  const int d = m.dim();
  for (const auto& t : m.terms())
    if (t.p % 2 == 1 && t.p > 1) rep.has_odd_terms = true;

  for (int s = 0; s < samples && rep.passed(); ++s) {
    const PsdMatrix b = random_psd(d, rng);
    const PsdMatrix c = random_psd(d, rng);
    const SymMatrix a = b.sym() + c.sym();  // a >= b in the PSD order

    const double xia = m.xi(a), xib = m.xi(b.sym());
    const double scale = 1.0 + std::abs(xia) + std::abs(xib);
    if (xib < -1e-12 * scale) {
      rep.nonneg_on_cone = false;
      rep.counterexample = {b.sym(), b.sym()};
      rep.detail = "xi negative on a PSD sample";
      break;
    }
    if (xia < xib - 1e-12 * scale) {
      rep.monotone_xi = false;
      rep.counterexample = {a, b.sym()};
      rep.detail = "xi not monotone along the PSD order";
      break;
    }
    if (!psd_order(m.grad_xi(a), m.grad_xi(b.sym()))) {
      rep.monotone_grad = false;
      rep.counterexample = {a, b.sym()};
      rep.detail = "grad_xi not monotone along the PSD order";
      break;
    }

    // midpoint convexity on an independent PSD pair
    const PsdMatrix u = random_psd(d, rng);
    const PsdMatrix v = random_psd(d, rng);
    const SymMatrix mid = 0.5 * (u.sym() + v.sym());
    const double lhs = m.xi(mid);
    const double rhs = 0.5 * (m.xi(u.sym()) + m.xi(v.sym()));
    if (lhs > rhs + 1e-12 * (1.0 + std::abs(lhs) + std::abs(rhs))) {
      rep.midpoint_convex = false;
      rep.counterexample = {u.sym(), v.sym()};
      rep.detail = "midpoint convexity fails on S^D_+";
      break;
    }
  }
  return rep;
}

SpinMeasure::SpinMeasure(int dim, std::vector<SpinAtom> atoms)
    : dim_(dim), atoms_(std::move(atoms)) {
  if (dim < 1) throw std::invalid_argument("SpinMeasure: dim must be positive");
  if (atoms_.empty()) throw std::invalid_argument("SpinMeasure: no atoms");
  double total = 0.0;
  for (const auto& a : atoms_) {
    if (a.tau.size() != dim) throw std::invalid_argument("SpinMeasure: atom dim mismatch");
    if (a.weight <= 0.0) throw std::invalid_argument("SpinMeasure: weights must be positive");
    if (a.tau.norm() > 1.0 + 1e-12)
      throw std::invalid_argument("SpinMeasure: atom outside the unit ball");
    total += a.weight;
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw std::invalid_argument("SpinMeasure: weights must sum to 1");
  for (auto& a : atoms_) a.weight /= total;
}

SpinMeasure SpinMeasure::ising() {
  Eigen::VectorXd up(1), down(1);
  up << 1.0;
  down << -1.0;
  return SpinMeasure(1, {{up, 0.5}, {down, 0.5}});
}

SpinMeasure SpinMeasure::potts(int dim) {
  std::vector<SpinAtom> atoms;
  for (int k = 0; k < dim; ++k) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(dim);
    e[k] = 1.0;
    atoms.push_back({e, 1.0 / dim});
  }
  return SpinMeasure(dim, std::move(atoms));
}

OverlapHull::OverlapHull(const SpinMeasure& p1) {
  for (const auto& a : p1.atoms()) {
    SymMatrix v = SymMatrix::outer(a.tau);
    bool dup = false;
    for (const auto& w : vertices_)
      if ((v - w).norm() <= 1e-12 * (1.0 + w.norm())) {
        dup = true;
        break;
      }
    if (!dup) vertices_.push_back(std::move(v));
  }
}

SymMatrix OverlapHull::combine(std::span<const double> weights) const {
  if (weights.size() != vertices_.size())
    throw std::invalid_argument("OverlapHull: weight count mismatch");
  SymMatrix x(vertices_[0].dim());
  for (std::size_t i = 0; i < vertices_.size(); ++i) x += weights[i] * vertices_[i];
  return x;
}

double OverlapHull::distance(const SymMatrix& x) const {
  // Projected-gradient QP over the weight simplex:
  //   min_w |sum_i w_i V_i - x|^2, w >= 0, sum w = 1.
  const int n = static_cast<int>(vertices_.size());
  std::vector<double> w(n, 1.0 / n);

  auto project_simplex = [](std::vector<double> v) {
    std::vector<double> u = v;
    std::sort(u.begin(), u.end(), std::greater<double>());
    double css = 0.0, theta = 0.0;
    int rho = 0;
    for (int i = 0; i < static_cast<int>(u.size()); ++i) {
      css += u[i];
      const double t = (css - 1.0) / (i + 1);
      if (u[i] - t > 0.0) {
        rho = i + 1;
        theta = t;
      }
    }
    (void)rho;
    for (double& vi : v) vi = std::max(0.0, vi - theta);
    return v;
  };

  // Gram matrix and linear term of the quadratic objective.
  Eigen::MatrixXd g(n, n);
  Eigen::VectorXd c(n);
  for (int i = 0; i < n; ++i) {
    c[i] = vertices_[i].dot(x);
    for (int j = i; j < n; ++j) g(i, j) = g(j, i) = vertices_[i].dot(vertices_[j]);
  }
  double step = 1.0 / std::max(1.0, g.norm());
  for (int it = 0; it < 20000; ++it) {
    Eigen::VectorXd wv = Eigen::Map<Eigen::VectorXd>(w.data(), n);
    Eigen::VectorXd grad = g * wv - c;
    std::vector<double> next(n);
    for (int i = 0; i < n; ++i) next[i] = w[i] - step * grad[i];
    next = project_simplex(std::move(next));
    double delta = 0.0;
    for (int i = 0; i < n; ++i) delta = std::max(delta, std::abs(next[i] - w[i]));
    w = std::move(next);
    if (delta < 1e-14) break;
  }
  return (combine(w) - x).norm();
}

bool OverlapHull::contains(const SymMatrix& x, double tol) const {
  return distance(x) <= tol;
}

}  // namespace vecspin
