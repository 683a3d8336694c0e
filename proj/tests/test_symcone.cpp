#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "vecspin/symcone.hpp"

#include <cmath>
#include <random>

using namespace vecspin;

TEST_CASE("psd_order basics") {
  const SymMatrix id = SymMatrix::identity(2);
  const SymMatrix zero(2);
  CHECK(psd_order(id, zero));
  CHECK(psd_order(SymMatrix::diag(std::vector<double>{1.0, -1.0}), zero) == false);

  std::mt19937_64 rng(11);
  for (int i = 0; i < 50; ++i) {
    const PsdMatrix p = random_psd(3, rng);
    const PsdMatrix q = random_psd(3, rng);
    CHECK(psd_order(p.sym() + q.sym(), p.sym()));
  }
}

TEST_CASE("psd_order is a partial order on samples") {
  std::mt19937_64 rng(12);
  for (int i = 0; i < 100; ++i) {
    const PsdMatrix a = random_psd(3, rng);
    CHECK(psd_order(a, a));  // reflexive
    const PsdMatrix b = random_psd(3, rng);
    const PsdMatrix c = random_psd(3, rng);
    // transitivity on a chain a <= a+b <= a+b+c
    const SymMatrix ab = a.sym() + b.sym();
    const SymMatrix abc = ab + c.sym();
    CHECK(psd_order(ab, a.sym()));
    CHECK(psd_order(abc, ab));
    CHECK(psd_order(abc, a.sym()));
    // antisymmetry within tolerance
    if (psd_order(a.sym(), ab) && psd_order(ab, a.sym()))
      CHECK((ab - a.sym()).norm() <= 1e-8);
  }
}

TEST_CASE("norm dominance along the order") {
  std::mt19937_64 rng(13);
  for (int i = 0; i < 200; ++i) {
    const PsdMatrix b = random_psd(3, rng);
    const PsdMatrix c = random_psd(3, rng);
    const SymMatrix a = b.sym() + c.sym();
    CHECK(a.norm() >= b.norm() - 1e-12);
  }
}

TEST_CASE("sqrt_psd") {
  const PsdMatrix id = PsdMatrix::identity(3);
  CHECK((sqrt_psd(id).sym() - SymMatrix::identity(3)).norm() < 1e-12);

  const PsdMatrix d49 = PsdMatrix::diag(std::vector<double>{4.0, 9.0});
  const PsdMatrix r = sqrt_psd(d49);
  CHECK(r(0, 0) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(r(1, 1) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(std::abs(r(0, 1)) < 1e-12);

  // factor-then-square oracle on random L L^T
  std::mt19937_64 rng(14);
  std::normal_distribution<double> gauss;
  for (int i = 0; i < 100; ++i) {
    Eigen::MatrixXd l(3, 3);
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) l(a, b) = gauss(rng);
    const PsdMatrix m(SymMatrix::from_dense(l * l.transpose()));
    const PsdMatrix s = sqrt_psd(m);
    const SymMatrix sq = SymMatrix::from_dense(s.dense() * s.dense());
    CHECK((sq - m.sym()).norm() <= 1e-9 * (1.0 + m.norm()));
    CHECK(s.norm() == doctest::Approx(std::sqrt(m.trace())).epsilon(1e-9));
  }
}

TEST_CASE("Powers-Stormer inequality on 1000 random pairs") {
  std::mt19937_64 rng(15);
  int checked = 0;
  for (int i = 0; i < 1000; ++i) {
    const int d = 1 + static_cast<int>(i % 3);
    const PsdMatrix a = random_psd(d, rng);
    const PsdMatrix b = random_psd(d, rng);
    const PsdMatrix ab(a.sym() + b.sym());
    const double lhs = (sqrt_psd(ab).sym() - sqrt_psd(a).sym()).norm();
    CHECK(lhs <= std::sqrt(b.trace()) + 1e-9);
    ++checked;
  }
  CHECK(checked == 1000);
}

TEST_CASE("norm/trace sandwich and inverse bound") {
  std::mt19937_64 rng(16);
  for (int i = 0; i < 200; ++i) {
    const PsdMatrix a = random_psd(3, rng);
    CHECK(a.trace() / std::sqrt(3.0) <= a.norm() + 1e-12);
    CHECK(a.norm() <= a.trace() + 1e-12);

    const PsdMatrix pd(a.sym() + 0.1 * SymMatrix::identity(3));
    const SymMatrix inv = inverse_pd(pd);
    CHECK(inv.norm() <= std::sqrt(3.0) / min_positive_eig(pd) + 1e-9);
  }
}

TEST_CASE("min_positive_eig") {
  CHECK(min_positive_eig(PsdMatrix::diag(std::vector<double>{3.0, 0.0})) ==
        doctest::Approx(3.0));
  CHECK(min_positive_eig(PsdMatrix::identity(4)) == doctest::Approx(1.0));
  CHECK(min_positive_eig(PsdMatrix::diag(std::vector<double>{2.0, 5.0, 0.0})) ==
        doctest::Approx(2.0));
  CHECK_THROWS_AS(min_positive_eig(PsdMatrix::zero(2)), std::domain_error);
}

TEST_CASE("k_bound") {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 20; ++i) {
    const PsdMatrix z = random_psd(2, rng);
    CHECK(k_bound(z, 0.0) == doctest::Approx(0.0));
  }
  CHECK(k_bound(PsdMatrix::zero(2), 0.3) == doctest::Approx(0.3));

  const double s2 = std::sqrt(2.0);
  const double expected = (s2 + 1.0) * (1.0 + std::pow(2.0, 0.25)) + std::sqrt(s2 + 1.0);
  CHECK(k_bound(PsdMatrix::identity(2), 1.0) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("lambda_embed") {
  const SymMatrix a1 = lambda_embed(std::vector<double>{5.0});
  CHECK(a1.dim() == 1);
  CHECK(a1(0, 0) == doctest::Approx(5.0));

  const SymMatrix a2 = lambda_embed(std::vector<double>{1.0, 4.0, 1.0});
  CHECK(a2(0, 0) == doctest::Approx(1.0));
  CHECK(a2(0, 1) == doctest::Approx(2.0));
  CHECK(a2(1, 1) == doctest::Approx(1.0));

  // identity against the brute-force triangular sum
  std::mt19937_64 rng(18);
  std::normal_distribution<double> gauss;
  for (int rep = 0; rep < 50; ++rep) {
    const int d = 2 + rep % 3;
    std::vector<double> lam(static_cast<std::size_t>(d) * (d + 1) / 2);
    for (double& v : lam) v = gauss(rng);
    const SymMatrix a = random_sym(d, rng);
    double brute = 0.0;
    std::size_t k = 0;
    for (int i = 0; i < d; ++i)
      for (int j = i; j < d; ++j, ++k) brute += lam[k] * a(i, j);
    CHECK(lambda_embed(lam).dot(a) == doctest::Approx(brute).epsilon(1e-12));
  }
}

TEST_CASE("PsdMatrix construction clips tolerable noise and rejects the rest") {
  SymMatrix slightly(2);
  slightly.set(0, 0, 1.0);
  slightly.set(1, 1, -0.5 * kPsdTol);
  CHECK_NOTHROW(PsdMatrix{slightly});

  SymMatrix bad(2);
  bad.set(0, 0, 1.0);
  bad.set(1, 1, -1e-3);
  CHECK_THROWS_AS(PsdMatrix{bad}, std::domain_error);
}
