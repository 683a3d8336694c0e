#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "test_util.hpp"
#include "vecspin/model.hpp"

#include <cmath>
#include <random>

using namespace vecspin;
using namespace vstest;

TEST_CASE("xi evaluation") {
  const MixtureModel m1 = ising_p2(1.0);
  CHECK(m1.xi(SymMatrix(1)) == doctest::Approx(0.0));
  CHECK(m1.xi(SymMatrix::diag(std::vector<double>{0.7})) == doctest::Approx(0.49));

  // D=2 linear term with beta = (1,1): xi(a) = sum of entries
  const MixtureModel lin(2, {{1, {1.0, 1.0}}});
  std::mt19937_64 rng(21);
  const SymMatrix a = random_sym(2, rng);
  double total = 0.0;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) total += a(i, j);
  CHECK(lin.xi(a) == doctest::Approx(total).epsilon(1e-12));

  // zero mixture
  const MixtureModel zero(2, {});
  CHECK(zero.xi(a) == 0.0);
}

TEST_CASE("xi is transpose-symmetric on general matrices") {
  const MixtureModel m(2, {{1, {0.3, 0.9}}, {2, {1.0, 0.5}}, {3, {0.2, 0.4}}});
  std::mt19937_64 rng(22);
  std::normal_distribution<double> gauss;
  for (int rep = 0; rep < 50; ++rep) {
    Eigen::MatrixXd a(2, 2);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) a(i, j) = gauss(rng);
    CHECK(m.xi_dense(a) == doctest::Approx(m.xi_dense(a.transpose())).epsilon(1e-12));
  }
}

TEST_CASE("grad_xi closed forms and finite differences") {
  const MixtureModel m1 = ising_p2(1.0);
  CHECK(m1.grad_xi(SymMatrix::diag(std::vector<double>{0.7}))(0, 0) == doctest::Approx(1.4));

  const MixtureModel m2(2, {{2, {1.0, 0.5}}, {3, {0.2, 0.7}}});
  CHECK(m2.grad_xi(SymMatrix(2)).norm() == doctest::Approx(0.0));

  std::mt19937_64 rng(23);
  const double h = 1e-5;
  for (int rep = 0; rep < 100; ++rep) {
    const SymMatrix a = random_sym(2, rng, 2.0);
    const SymMatrix g = m2.grad_xi(a);
    for (int i = 0; i < 2; ++i)
      for (int j = i; j < 2; ++j) {
        SymMatrix basis(2);
        basis.set(i, j, 1.0);
        const double denom = (i == j) ? 1.0 : 2.0;
        const double fd =
            (m2.xi(a + h * basis) - m2.xi(a - h * basis)) / (2.0 * h) / denom;
        CHECK(g(i, j) == doctest::Approx(fd).epsilon(1e-6));
      }
  }
}

TEST_CASE("grad_xi maps the cone into itself") {
  const MixtureModel m(2, {{1, {0.5, 0.5}}, {2, {1.0, 0.7}}});
  std::mt19937_64 rng(24);
  for (int rep = 0; rep < 100; ++rep) {
    const PsdMatrix a = random_psd(2, rng);
    CHECK_NOTHROW(PsdMatrix{m.grad_xi(a.sym())});
  }
}

TEST_CASE("theta") {
  const MixtureModel m1 = ising_p2(1.0);
  CHECK(m1.theta(SymMatrix(1)) == doctest::Approx(0.0));
  CHECK(m1.theta(SymMatrix::diag(std::vector<double>{0.7})) == doctest::Approx(0.49));

  // entrywise sum oracle
  const MixtureModel m(2, {{1, {0.3, 0.9}}, {2, {1.0, 0.5}}});
  std::mt19937_64 rng(25);
  for (int rep = 0; rep < 50; ++rep) {
    const SymMatrix a = random_sym(2, rng);
    const SymMatrix th = m.theta_entrywise(a);
    double total = 0.0;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) total += th(i, j);
    CHECK(total == doctest::Approx(m.theta(a)).epsilon(1e-10));
  }
}

TEST_CASE("theta nonnegative on the cone for the convex family") {
  const MixtureModel m(2, {{1, {0.4, 0.4}}, {2, {0.8, 0.8}}});
  std::mt19937_64 rng(26);
  for (int rep = 0; rep < 200; ++rep) {
    const PsdMatrix a = random_psd(2, rng);
    CHECK(m.theta(a.sym()) >= -1e-12);
  }
}

TEST_CASE("xi_star against a dense 1-D grid") {
  const MixtureModel m = ising_p2(1.0);  // xi(z) = z^2 on D=1
  XiStarSpec spec;
  spec.seed = 99;

  auto grid_oracle = [&](double y) {
    double best = 0.0;
    for (int i = 0; i <= 400000; ++i) {
      const double z = i * 1e-5;
      best = std::max(best, z * y - z * z);
    }
    return best;
  };

  for (double y : {0.0, 0.4, 1.3, 2.0}) {
    const XiStarResult r = xi_star(m, SymMatrix::diag(std::vector<double>{y}), spec);
    CHECK(!r.diverged);
    CHECK(r.value == doctest::Approx(grid_oracle(y)).epsilon(1e-6));
    CHECK(r.maximizer(0, 0) == doctest::Approx(y / 2.0).epsilon(1e-3));
  }

  // cone constraint binds for negative tilt
  const XiStarResult neg = xi_star(m, SymMatrix::diag(std::vector<double>{-1.0}), spec);
  CHECK(neg.value == doctest::Approx(0.0).epsilon(1e-10));

  // zero tilt
  const XiStarResult zero = xi_star(m, SymMatrix(1), spec);
  CHECK(zero.value == doctest::Approx(0.0).epsilon(1e-10));
}

TEST_CASE("hypothesis validation") {
  // symmetric Potts-style p in {1,2}: all checks pass
  const MixtureModel good(2, {{1, {0.5, 0.5}}, {2, {1.0, 1.0}}});
  CHECK(validate_hypotheses(good, 300, 31).passed());

  // zero mixture trivially passes
  CHECK(validate_hypotheses(MixtureModel(2, {}), 100, 32).passed());

  // single p=3 term fails midpoint convexity on pairs with negative
  // off-diagonal entries
  const MixtureModel cubic(2, {{3, {1.0, 1.0}}});
  const HypothesisReport rep = validate_hypotheses(cubic, 500, 33);
  CHECK(!rep.passed());
  CHECK(rep.counterexample.has_value());
  CHECK(rep.has_odd_terms);
}

TEST_CASE("spin measures") {
  const SpinMeasure ising = SpinMeasure::ising();
  CHECK(ising.dim() == 1);
  CHECK(ising.size() == 2);
  CHECK(ising.atoms()[0].weight == doctest::Approx(0.5));

  const SpinMeasure potts = SpinMeasure::potts(3);
  CHECK(potts.size() == 3);
  for (const auto& a : potts.atoms()) CHECK(a.tau.norm() == doctest::Approx(1.0));

  // weights must sum to one, atoms must stay in the unit ball
  Eigen::VectorXd big(1);
  big << 2.0;
  CHECK_THROWS_AS(SpinMeasure(1, {{big, 1.0}}), std::invalid_argument);
  Eigen::VectorXd ok(1);
  ok << 1.0;
  CHECK_THROWS_AS(SpinMeasure(1, {{ok, 0.7}}), std::invalid_argument);
}

TEST_CASE("overlap hull") {
  const OverlapHull ising_hull(SpinMeasure::ising());
  CHECK(ising_hull.vertices().size() == 1);  // both atoms give tau tau^T = 1
  CHECK(ising_hull.vertices()[0](0, 0) == doctest::Approx(1.0));
  CHECK(ising_hull.contains(SymMatrix::diag(std::vector<double>{1.0})));
  CHECK(!ising_hull.contains(SymMatrix::diag(std::vector<double>{0.5})));

  const OverlapHull potts_hull(SpinMeasure::potts(2));
  CHECK(potts_hull.vertices().size() == 2);
  // the segment between diag(1,0) and diag(0,1)
  CHECK(potts_hull.contains(SymMatrix::diag(std::vector<double>{0.5, 0.5})));
  CHECK(potts_hull.contains(SymMatrix::diag(std::vector<double>{0.2, 0.8})));
  CHECK(!potts_hull.contains(SymMatrix::diag(std::vector<double>{0.2, 0.2})));
  SymMatrix off(2);
  off.set(0, 0, 0.5);
  off.set(1, 1, 0.5);
  off.set(0, 1, 0.3);
  CHECK(!potts_hull.contains(off));
}

TEST_CASE("symmetric mixture detection") {
  CHECK(MixtureModel(2, {{2, {1.0, 1.0}}}).symmetric());
  CHECK(!MixtureModel(2, {{2, {1.0, 2.0}}}).symmetric());
  CHECK(MixtureModel(2, {}).symmetric());
}
