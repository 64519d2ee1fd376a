#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "sphkern/errors.hpp"
#include "sphkern/sphere_core.hpp"

using namespace sphkern;
using std::numbers::pi;

namespace {

Eigen::VectorXd random_unit(std::mt19937_64& rng, int d) {
  std::normal_distribution<double> n;
  Eigen::VectorXd v(d);
  for (int i = 0; i < d; ++i) v[i] = n(rng);
  return v / v.norm();
}

Eigen::VectorXd random_tangent(std::mt19937_64& rng, const Eigen::VectorXd& base) {
  std::normal_distribution<double> n;
  Eigen::VectorXd v(base.size());
  for (int i = 0; i < base.size(); ++i) v[i] = n(rng);
  v -= base.dot(v) * base;
  v -= base.dot(v) * base;
  return v;
}

}  // namespace

TEST_CASE("dimension rejects d < 2") {
  CHECK_THROWS_AS(Dimension(1), DomainError);
  CHECK(Dimension(2).value() == 2);
  CHECK(Dimension(5).measure_exponent() == doctest::Approx(1.0));
}

TEST_CASE("surface areas") {
  CHECK(surface_area(1) == doctest::Approx(2.0));
  CHECK(surface_area(2) == doctest::Approx(2 * pi));
  CHECK(surface_area(3) == doctest::Approx(4 * pi));
  CHECK(surface_area(4) == doctest::Approx(2 * pi * pi));
  CHECK_THROWS_AS(surface_area(0), DomainError);
}

TEST_CASE("gauss-jacobi rules integrate polynomials against singular weights") {
  for (auto [a, b] : {std::pair{0.0, 0.0}, {-0.5, -0.5}, {0.3, -0.7}, {-0.9, 2.5}}) {
    const auto rule = gauss_jacobi(20, a, b);
    CHECK(rule->order() == 20);
    for (int i = 1; i < rule->order(); ++i) CHECK(rule->nodes()[i] > rule->nodes()[i - 1]);
    for (double w : rule->weights()) CHECK(w > 0.0);
    // \int (1-c)^a (1+c)^b dc = 2^{a+b+1} B(a+1, b+1)
    const double mass = std::pow(2.0, a + b + 1) * std::tgamma(a + 1) * std::tgamma(b + 1) / std::tgamma(a + b + 2);
    CHECK(rule->apply([](double) { return 1.0; }) == doctest::Approx(mass).epsilon(1e-13));
    // first moment: mass * (b - a) / (a + b + 2)
    CHECK(rule->apply([](double c) { return c; }) ==
          doctest::Approx(mass * (b - a) / (a + b + 2)).epsilon(1e-12).scale(mass));
  }
  CHECK(gauss_jacobi(16, 0.1, 0.2) == gauss_jacobi(16, 0.1, 0.2));
  CHECK_THROWS_AS(gauss_jacobi(8, -1.0, 0.0), DivergentIntegral);
}

TEST_CASE("large-order rules stay accurate") {
  const auto rule = gauss_jacobi(4096, -0.5, -0.5);
  CHECK(rule->apply([](double) { return 1.0; }) == doctest::Approx(pi).epsilon(1e-13));
  CHECK(rule->apply([](double c) { return c * c; }) == doctest::Approx(pi / 2).epsilon(1e-12));
}

TEST_CASE("zonal integrals") {
  const Dimension d3(3);
  CHECK(zonal_integral(ZonalProfile{[](double) { return 1.0; }}, d3) == doctest::Approx(4 * pi));
  CHECK(zonal_integral(ZonalProfile{[](double c) { return 1 - c * c; }}, d3) == doctest::Approx(8 * pi / 3));
  for (int d = 2; d <= 6; ++d) {
    const double v = zonal_integral(ZonalProfile{[](double c) { return c; }}, Dimension(d));
    CHECK(std::abs(v) < 1e-13);
    CHECK(zonal_integral(ZonalProfile{[](double) { return 1.0; }}, Dimension(d)) ==
          doctest::Approx(surface_area(d)).epsilon(1e-13));
  }
  // Declared singularity (1-c)^{-1/2} at d = 3: 2 pi \int (1-c)^{-1/2} dc = 2 pi * 2 sqrt 2.
  CHECK(zonal_integral(ZonalProfile{[](double) { return 1.0; }, -0.5, 0.0}, d3) ==
        doctest::Approx(4 * std::sqrt(2.0) * pi).epsilon(1e-12));
  CHECK_THROWS_AS(zonal_integral(ZonalProfile{[](double) { return 1.0; }, -1.0, 0.0}, d3), DivergentIntegral);
  const auto wrong = gauss_legendre(16);
  CHECK_THROWS_AS(zonal_integral(ZonalProfile{[](double) { return 1.0; }}, Dimension(4), *wrong), DomainError);
}

TEST_CASE("zonal integral matches direct sphere quadrature at random axes") {
  std::mt19937_64 rng(7);
  auto g = [](double c) { return std::exp(c) * (1 + c * c * c); };
  const double zonal = zonal_integral(ZonalProfile{g}, Dimension(3));
  const auto gl = gauss_legendre(64);
  for (int trial = 0; trial < 5; ++trial) {
    const Eigen::VectorXd e = random_unit(rng, 3);
    double acc = 0.0;
    const int nphi = 128;
    for (int i = 0; i < gl->order(); ++i) {
      const double z = gl->nodes()[i];
      const double r = std::sqrt(1 - z * z);
      for (int j = 0; j < nphi; ++j) {
        const double phi = 2 * pi * j / nphi;
        Eigen::Vector3d s(r * std::cos(phi), r * std::sin(phi), z);
        acc += gl->weights()[i] * (2 * pi / nphi) * g(e.dot(s));
      }
    }
    CHECK(acc == doctest::Approx(zonal).epsilon(1e-8));
  }
}

TEST_CASE("tangent map basics") {
  Eigen::VectorXd s(3), x(3);
  s << 0, 0, 1;
  x << 1, 2, 0;
  CHECK(tangent_map(s, TangentVector(s, x)).dir().isApprox(x));
  CHECK(tangent_map(s, TangentVector(-s, x)).dir().isApprox(-x));
  CHECK_THROWS_AS(TangentVector(s, s), NotTangent);
  Eigen::VectorXd notunit(3);
  notunit << 0, 0, 2;
  CHECK_THROWS_AS(TangentVector(notunit, x), DomainError);
}

TEST_CASE("tangent map adjoint identity and tangency on random samples") {
  std::mt19937_64 rng(11);
  for (int d : {3, 4, 6}) {
    for (int k = 0; k < 1000; ++k) {
      const auto s = random_unit(rng, d), sp = random_unit(rng, d);
      const TangentVector x(s, random_tangent(rng, s));
      const TangentVector y(sp, random_tangent(rng, sp));
      const auto my = tangent_map(s, y);   // M_{sp,s} y
      const auto mx = tangent_map(sp, x);  // M_{s,sp} x
      CHECK(std::abs(x.dir().dot(my.dir()) - mx.dir().dot(y.dir())) < 1e-12);
      CHECK(std::abs(my.dir().dot(s)) < 1e-10);
    }
  }
}

TEST_CASE("contraction deficit") {
  std::mt19937_64 rng(3);
  Eigen::VectorXd s(3), sp(3), e_in(3), e_out(3);
  s << 1, 0, 0;
  sp << 0, 1, 0;
  e_in << 0, 1, 0;
  e_out << 0, 0, 1;
  CHECK(contraction_deficit(s, s, e_in) == doctest::Approx(0.0));
  CHECK(contraction_deficit(s, -s, e_in) == doctest::Approx(0.0));
  CHECK(contraction_deficit(s, sp, e_in) == doctest::Approx(0.0));
  CHECK(contraction_deficit(s, sp, e_out) == doctest::Approx(1.0));
  for (int k = 0; k < 500; ++k) {
    const auto a = random_unit(rng, 4), b = random_unit(rng, 4);
    Eigen::VectorXd e = random_tangent(rng, a);
    e /= e.norm();
    const double v = contraction_deficit(a, b, e);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}
