#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "test_util.hpp"
#include "vecspin/paths.hpp"

#include <cmath>
#include <random>

using namespace vecspin;
using namespace vstest;

namespace {

PsdMatrix scalar(double v) { return PsdMatrix::diag(std::vector<double>{v}); }

}  // namespace

TEST_CASE("canonical form drops empty intervals and merges equal levels") {
  // zero-width middle level
  StepPath a({0.0, 0.5, 0.5, 1.0}, {scalar(0.0), scalar(0.3), scalar(0.3)});
  CHECK(a.levels() == 2);
  CHECK(a.grid() == std::vector<double>{0.0, 0.5, 1.0});
  CHECK(a.value(0)(0, 0) == doctest::Approx(0.0));
  CHECK(a.value(1)(0, 0) == doctest::Approx(0.3));

  // empty leading interval (0,0]
  StepPath b({0.0, 0.0, 1.0}, {scalar(0.0), scalar(0.3)});
  CHECK(b.levels() == 1);
  CHECK(b.grid() == std::vector<double>{0.0, 1.0});
  CHECK(b.value(0)(0, 0) == doctest::Approx(0.3));

  // already canonical input is unchanged
  StepPath c({0.0, 0.4, 1.0}, {scalar(0.1), scalar(0.5)});
  const StepPath cc = canonicalize(c);
  CHECK(cc.levels() == 2);
  CHECK(cc.grid() == c.grid());

  // repeated consecutive value merges
  StepPath d({0.0, 0.4, 1.0}, {scalar(0.2), scalar(0.2)});
  CHECK(d.levels() == 1);
}

TEST_CASE("canonicalization preserves the path as a function") {
  std::mt19937_64 rng(41);
  StepPath raw({0.0, 0.25, 0.25, 0.7, 1.0},
               {scalar(0.0), scalar(0.1), scalar(0.1), scalar(0.9)});
  const StepPath canon = canonicalize(raw);
  for (int i = 1; i <= 100; ++i) {
    const double s = i / 100.0;
    CHECK((raw.at(s).sym() - canon.at(s).sym()).norm() <= 1e-14);
  }
  (void)rng;
}

TEST_CASE("non-monotone input is rejected") {
  CHECK_THROWS_AS(StepPath({0.0, 0.5, 1.0}, {scalar(0.5), scalar(0.2)}), std::domain_error);
  CHECK_THROWS_AS(StepPath({0.0, 0.6, 0.5, 1.0}, {scalar(0.1), scalar(0.2), scalar(0.3)}),
                  std::domain_error);
}

TEST_CASE("path distance") {
  std::mt19937_64 rng(42);
  const StepPath p = random_path(2, 3, rng);
  CHECK(path_distance(p, p) == doctest::Approx(0.0));

  const StepPath ca = StepPath::constant(scalar(0.8));
  const StepPath cb = StepPath::constant(scalar(0.3));
  CHECK(path_distance(ca, cb) == doctest::Approx(0.5).epsilon(1e-12));

  // two-level vs one-level pair against a Riemann sum
  const StepPath two({0.0, 0.35, 1.0}, {scalar(0.1), scalar(0.6)});
  const StepPath one = StepPath::constant(scalar(0.4));
  const double oracle = riemann_path_integral(
      two, one, 10000, [](const SymMatrix& a, const SymMatrix& b) { return (a - b).norm(); });
  CHECK(path_distance(two, one) == doctest::Approx(oracle).epsilon(1e-8));
}

TEST_CASE("projection to an endpoint class") {
  std::mt19937_64 rng(43);

  // w = 0 leaves the path unchanged
  const StepPath p = random_path(2, 2, rng);
  const ProjectionResult same = project_to_endpoint(p, p.endpoint());
  CHECK(same.distance <= 1e-9);

  // z = 0 forces the zero path
  const ProjectionResult zero = project_to_endpoint(p, PsdMatrix::zero(2));
  CHECK(zero.path.levels() == 1);
  CHECK(zero.path.endpoint().norm() == doctest::Approx(0.0));

  // singular target: spec'd D=2 example
  std::vector<double> g{0.0, 0.45, 1.0};
  std::vector<PsdMatrix> v{PsdMatrix::diag(std::vector<double>{0.5, 0.05}),
                           PsdMatrix::diag(std::vector<double>{1.2, 0.1})};
  const StepPath pi(g, std::move(v));
  const PsdMatrix z = PsdMatrix::diag(std::vector<double>{1.0, 0.0});
  const ProjectionResult proj = project_to_endpoint(pi, z);
  CHECK(proj.path.in_endpoint_class(z, 1e-10));
  for (int j = 0; j + 1 < proj.path.levels(); ++j)
    CHECK(psd_order(proj.path.value(j + 1), proj.path.value(j)));
  CHECK(proj.distance <= 20.0 * proj.bound);
}

TEST_CASE("projection suite: 500 random instances stay in the class") {
  std::mt19937_64 rng(44);
  double max_ratio = 0.0;
  int done = 0;
  while (done < 500) {
    const int d = 1 + static_cast<int>(done % 3);
    StepPath pi = random_path(d, 1 + static_cast<int>(done % 3), rng);
    // split the endpoint into z + w
    const PsdMatrix end = pi.endpoint();
    const PsdMatrix w = random_psd(d, rng, 0.3 * (1.0 + end.norm()));
    SymMatrix zs = end.sym() - w.sym();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(zs.dense());
    if (es.eigenvalues()[0] < 0.0) continue;  // need z PSD
    const PsdMatrix z(zs);
    const ProjectionResult proj = project_to_endpoint(pi, z);
    CHECK(proj.path.in_endpoint_class(z, 1e-10));
    for (int j = 0; j + 1 < proj.path.levels(); ++j)
      CHECK(psd_order(proj.path.value(j + 1), proj.path.value(j)));
    if (proj.bound > 1e-12) max_ratio = std::max(max_ratio, proj.distance / proj.bound);
    ++done;
  }
  CHECK(std::isfinite(max_ratio));
  MESSAGE("empirical distance / k_bound maximum over the suite: ", max_ratio);
}

TEST_CASE("conjugation preserves the PSD order") {
  std::mt19937_64 rng(45);
  std::normal_distribution<double> gauss;
  for (int rep = 0; rep < 100; ++rep) {
    const PsdMatrix a = random_psd(3, rng);
    const PsdMatrix c = random_psd(3, rng);
    const SymMatrix b = a.sym() + c.sym();
    Eigen::MatrixXd h(3, 3);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) h(i, j) = gauss(rng);
    CHECK(psd_order(conjugate(h, b), conjugate(h, a.sym())));
  }
}

TEST_CASE("lift to a dominating endpoint") {
  // lifting to the current endpoint is a no-op after canonicalization
  const StepPath p = StepPath::constant(scalar(0.7));
  const StepPath lifted = lift_to_endpoint(p, scalar(0.7), PsdMatrix::zero(1), 0.1);
  CHECK(lifted.levels() == 1);
  CHECK(lifted.endpoint()(0, 0) == doctest::Approx(0.7));

  // spec'd direct construction
  const StepPath q = StepPath::constant(scalar(0.5));
  const StepPath up = lift_to_endpoint(q, scalar(0.8), PsdMatrix::zero(1), 0.1);
  CHECK(up.levels() == 2);
  CHECK(up.grid() == std::vector<double>{0.0, 0.9, 1.0});
  CHECK(up.value(0)(0, 0) == doctest::Approx(0.5));
  CHECK(up.value(1)(0, 0) == doctest::Approx(0.8));

  // dominance violations are rejected
  CHECK_THROWS_AS(lift_to_endpoint(q, scalar(0.4), PsdMatrix::zero(1), 0.1),
                  std::domain_error);

  // the helper shift dominates both endpoints
  const PsdMatrix z = scalar(0.4);
  const PsdMatrix zp = scalar(0.9);
  const PsdMatrix w = dominating_shift(z, zp);
  CHECK(psd_order(z.sym() + w.sym(), zp.sym()));
}
