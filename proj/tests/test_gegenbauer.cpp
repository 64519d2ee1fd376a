#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "sphkern/errors.hpp"
#include "sphkern/gegenbauer.hpp"

using namespace sphkern;
using std::numbers::pi;

TEST_CASE("low-degree values") {
  for (int d = 2; d <= 7; ++d) {
    const PolyFamily f(Dimension(d), 10);
    CHECK(f.eval(0, 0.3) == 1.0);
    CHECK(f.eval(1, 0.3) == doctest::Approx(0.3));
    const double c = 0.37;
    CHECK(f.eval(2, c) == doctest::Approx(c * c - (1 - c * c) / (d - 1)));
  }
  const PolyFamily leg(Dimension(3), 4);
  CHECK(leg.eval(2, 0.0) == doctest::Approx(-0.5));
  const PolyFamily cheb(Dimension(2), 12);
  for (double c : {-0.9, -0.2, 0.5, 0.99})
    CHECK(cheb.eval(7, c) == doctest::Approx(std::cos(7 * std::acos(c))));
  CHECK_THROWS_AS((void)leg.eval(2, 1.0001), DomainError);
  CHECK_THROWS_AS((void)leg.eval(5, 0.0), DomainError);
}

TEST_CASE("normalization, bounds and parity up to degree 200") {
  for (int d : {2, 3, 4, 6}) {
    const PolyFamily f(Dimension(d), 200);
    std::vector<double> p(201);
    for (int j = 0; j <= 400; ++j) {
      const double c = -1.0 + j / 200.0;
      f.eval_all(c, p);
      for (double v : p) CHECK(std::abs(v) <= 1.0 + 1e-12);
    }
    for (int l = 0; l <= 200; ++l) {
      CHECK(f.eval(l, 1.0) == 1.0);
      CHECK(f.eval(l, -0.3) == doctest::Approx((l % 2 ? -1.0 : 1.0) * f.eval(l, 0.3)).epsilon(1e-12));
    }
  }
}

TEST_CASE("orthogonality against the zonal measure") {
  for (int d : {2, 3, 5}) {
    const Dimension dim(d);
    const PolyFamily f(dim, 50);
    const auto rule = gauss_jacobi(kDefaultQuadratureOrder, dim.measure_exponent(), dim.measure_exponent());
    std::vector<double> p(51);
    std::vector<std::vector<double>> gram(51, std::vector<double>(51, 0.0));
    for (int i = 0; i < rule->order(); ++i) {
      f.eval_all(rule->nodes()[i], p);
      for (int a = 0; a <= 50; ++a)
        for (int b = 0; b < a; ++b) gram[a][b] += rule->weights()[i] * p[a] * p[b];
    }
    double worst = 0.0;
    for (int a = 0; a <= 50; ++a)
      for (int b = 0; b < a; ++b) worst = std::max(worst, std::abs(gram[a][b]));
    CHECK(worst <= 1e-10);
  }
}

TEST_CASE("Q recurrence matches (1-P)/(1-c) and derivatives match finite differences") {
  const PolyFamily f(Dimension(4), 30);
  std::vector<double> q(31), p(31), dp(31), p2(31), p3(31);
  for (double c : {-0.8, 0.1, 0.7}) {
    f.one_minus_ratio_all(c, q);
    f.eval_all(c, p, dp);
    f.eval_all(c + 1e-6, p2);
    f.eval_all(c - 1e-6, p3);
    for (int l = 0; l <= 30; ++l) {
      CHECK(q[l] == doctest::Approx((1 - p[l]) / (1 - c)).epsilon(1e-10));
      CHECK(dp[l] == doctest::Approx((p2[l] - p3[l]) / 2e-6).epsilon(1e-5));
    }
  }
  f.one_minus_ratio_all(1.0, q);
  // Q_l(1) = P_l'(1) = lambda_l / (d - 1)
  for (int l = 0; l <= 30; ++l) CHECK(q[l] == doctest::Approx(laplace_eigenvalue(Dimension(4), l) / 3.0));
}

TEST_CASE("Clenshaw series") {
  const PolyFamily f(Dimension(3), 20);
  std::vector<double> a(21);
  for (int l = 0; l <= 20; ++l) a[l] = 1.0 / (1 + l * l);
  for (double c : {-1.0, -0.4, 0.0, 0.6, 1.0}) {
    double direct = 0.0;
    for (int l = 0; l <= 20; ++l) direct += a[l] * f.eval(l, c);
    CHECK(f.series(a, c) == doctest::Approx(direct).epsilon(1e-13));
  }
}

TEST_CASE("eigen data") {
  CHECK(laplace_eigenvalue(Dimension(3), 0) == 0.0);
  CHECK(laplace_eigenvalue(Dimension(3), 2) == 6.0);
  for (int k = 0; k < 10; ++k) CHECK(laplace_eigenvalue(Dimension(2), k) == k * k);
  CHECK(eigenspace_dim(Dimension(2), 3) == 2);
  CHECK(eigenspace_dim(Dimension(3), 2) == 5);
  for (int d = 2; d <= 8; ++d) CHECK(eigenspace_dim(Dimension(d), 0) == 1);
  CHECK(eigenspace_dim(Dimension(4), 3) == 16);  // (l+1)^2
  for (int d = 2; d <= 7; ++d)
    for (int l = 0; l <= 40; ++l)
      CHECK(eigenspace_dim_real(Dimension(d), l) ==
            doctest::Approx(static_cast<double>(eigenspace_dim(Dimension(d), l))).epsilon(1e-12));
  CHECK_THROWS_AS(eigenspace_dim(Dimension(60), 200), OutOfRange);
  const auto e = eigen_data(Dimension(5), 3);
  CHECK(e.lambda == 18.0);
  CHECK(e.dim == 30);
}

TEST_CASE("heat kernel") {
  // d = 2, t = 1, c = 1
  double s = 1.0;
  for (int k = 1; k < 20; ++k) s += 2 * std::exp(-k * k);
  CHECK(heat_kernel_profile(Dimension(2), 1.0, 1.0) == doctest::Approx(s / (2 * pi)).epsilon(1e-14));
  for (int d : {2, 3, 4, 5}) {
    const Dimension dim(d);
    CHECK(heat_kernel_profile(dim, 50.0, 0.3) == doctest::Approx(1.0 / surface_area(d)).epsilon(1e-14));
    for (double t : {0.005, 0.05, 0.5, 3.0}) {
      const int L = heat_kernel_modes(dim, t);
      for (int j = 0; j <= 100; ++j) CHECK(heat_kernel_profile(dim, t, -1.0 + j / 50.0, L) >= 0.0);
      const double mass = zonal_integral(ZonalProfile{[&](double c) { return heat_kernel_profile(dim, t, c, L); }},
                                         dim, 2 * L + 16);
      CHECK(mass == doctest::Approx(1.0).epsilon(1e-10));
    }
  }
  CHECK_THROWS_AS(heat_kernel_profile(Dimension(3), 0.001, 0.5, 8), TruncationError);
  CHECK_THROWS_AS(heat_kernel_profile(Dimension(3), 0.0, 0.5), DomainError);
}

TEST_CASE("legendre inequality") {
  for (int d = 2; d <= 6; ++d) {
    const auto rep = legendre_inequality_check(Dimension(d), 40, 1001);
    CHECK(rep.max_violation <= 1e-12);
  }
  const auto one = legendre_inequality_check(Dimension(3), 1, 11);
  CHECK(std::abs(one.max_violation) < 1e-15);
  CHECK_THROWS_AS(legendre_inequality_check(Dimension(3), 0, 11), DomainError);
}
