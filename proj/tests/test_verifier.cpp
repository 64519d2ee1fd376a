#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "sphkern/constants.hpp"
#include "sphkern/errors.hpp"
#include "sphkern/gegenbauer.hpp"
#include "sphkern/verifier.hpp"

using namespace sphkern;
using std::numbers::pi;

namespace {

SphereFunction circle_of(int N, auto f) {
  std::vector<double> v(N);
  for (int j = 0; j < N; ++j) v[j] = f(2.0 * pi * j / N);
  return SphereFunction::circle(std::move(v));
}

double max_abs_diff(const SphereFunction& a, const SphereFunction& b) {
  const auto x = a.data(), y = b.data();
  double m = 0.0;
  for (std::size_t i = 0; i < std::max(x.size(), y.size()); ++i) {
    const double u = i < x.size() ? x[i] : 0.0;
    const double v = i < y.size() ? y[i] : 0.0;
    m = std::max(m, std::abs(u - v));
  }
  return m;
}

SphereFunction p2(int d) { return SphereFunction::zonal(Dimension(d), {0.0, 0.0, 1.0}); }

KernelSpec constant(int d) { return KernelSpec(Dimension(d), ConstantKernel{1.0}); }

// Smooth kernel 1 + c/2 + P_2(c)/2, tabulated on a fine grid. The linear term
// gives P_1 a nonzero Funk-Hecke coefficient.
KernelSpec blend_kernel() {
  std::vector<double> cs, vs;
  for (int i = 0; i <= 40; ++i) {
    const double c = -std::cos(pi * i / 40.0);
    cs.push_back(c);
    vs.push_back(1.0 + 0.5 * c + 0.5 * (1.5 * c * c - 0.5));
  }
  return KernelSpec(Dimension(3), TabulatedKernel{cs, vs, 0.0, 0.0});
}

SphereFunction random_positive(Dimension d, std::uint64_t seed, double amplitude = 1.0, int grid = 64) {
  SamplerSpec s;
  s.seed = seed;
  s.bandwidth = 6;
  s.amplitude = amplitude;
  s.circle_grid = grid;
  std::mt19937_64 rng(seed);
  return SphereFunction::exp_of(random_even_exponent(d, s, rng));
}

}  // namespace

TEST_CASE("sphere function construction and evenness") {
  CHECK_THROWS_AS(SphereFunction::circle({1.0, 2.0, 3.0}), DomainError);
  CHECK_THROWS_AS(SphereFunction::zonal(Dimension(2), {1.0}), DomainError);
  CHECK(circle_of(16, [](double t) { return std::cos(2 * t); }).even());
  CHECK_FALSE(circle_of(16, [](double t) { return std::cos(t); }).even());
  CHECK(p2(3).even());
  CHECK_FALSE(SphereFunction::zonal(Dimension(3), {0.0, 1.0}).even());

  const auto F = circle_of(32, [](double t) { return 2.0 + std::cos(2 * t) + 0.3 * std::sin(4 * t); });
  CHECK(F.at_angle(0.7) == doctest::Approx(2.0 + std::cos(1.4) + 0.3 * std::sin(2.8)).epsilon(1e-13));
  const auto G = F.resampled(128);
  CHECK(G.at_angle(0.7) == doctest::Approx(F.at_angle(0.7)).epsilon(1e-13));
  CHECK(G.resampled(32).data()[5] == doctest::Approx(F.data()[5]).epsilon(1e-13));

  const auto g = SphereFunction::zonal(Dimension(3), {0.1, 0.0, 0.8, 0.0, -0.3});
  const auto eg = SphereFunction::exp_of(g);
  REQUIRE(eg.log_data());
  CHECK(eg.even());
  const PolyFamily fam(Dimension(3), eg.band_limit());
  for (double c : {-0.9, -0.2, 0.4, 1.0}) {
    const double want = std::exp(g.at_cosine(c));
    CHECK(fam.series(eg.data(), c) == doctest::Approx(want).epsilon(1e-13));
  }
}

TEST_CASE("apply_B and apply_laplacian") {
  const auto spec3 = btilde_spectrum(constant(3), 12);
  SUBCASE("constants are annihilated") {
    const auto one = SphereFunction::zonal(Dimension(3), {2.5});
    CHECK(std::abs(apply_B(spec3, one).data()[0]) < 1e-14);
    CHECK(std::abs(apply_laplacian(one).data()[0]) < 1e-14);
  }
  SUBCASE("single modes") {
    const auto BF = apply_B(spec3, p2(3));
    CHECK(BF.data()[2] == doctest::Approx(-4.0 * pi).epsilon(1e-10));
    CHECK(apply_laplacian(p2(3)).data()[2] == doctest::Approx(-6.0));
    const auto c2 = circle_of(64, [](double t) { return std::cos(2 * t); });
    const auto L = apply_laplacian(c2);
    for (int j = 0; j < 64; ++j) CHECK(L.data()[j] == doctest::Approx(-4.0 * c2.data()[j]).epsilon(1e-12));
  }
  SUBCASE("mass conservation, commutation and evenness") {
    const auto spec2 = btilde_spectrum(constant(2), 40);
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const auto F3 = random_positive(Dimension(3), seed);
      const auto spec = btilde_spectrum(constant(3), F3.band_limit());
      const auto B = apply_B(spec, F3);
      CHECK(std::abs(integrate(B)) < 1e-10);
      CHECK(B.even());
      CHECK(apply_laplacian(B).even());
      CHECK(max_abs_diff(apply_B(spec, apply_laplacian(F3)), apply_laplacian(B)) < 1e-10);

      const auto F2 = random_positive(Dimension(2), seed);
      const auto B2 = apply_B(spec2, F2);
      CHECK(std::abs(integrate(B2)) < 1e-10);
      CHECK(B2.even());
      CHECK(max_abs_diff(apply_B(spec2, apply_laplacian(F2)), apply_laplacian(B2)) < 1e-10);
    }
  }
  SUBCASE("band limit") {
    const auto spec = btilde_spectrum(constant(3), 4);
    CHECK_THROWS_AS((void)apply_B(spec, SphereFunction::zonal(Dimension(3), std::vector<double>(8, 0.1))),
                    BandLimitExceeded);
  }
}

TEST_CASE("gamma_delta and gamma2_mixed") {
  const auto one = SphereFunction::zonal(Dimension(3), {1.0});
  CHECK(max_abs_diff(gamma_delta(p2(3), one), SphereFunction::zonal(Dimension(3), {0.0})) < 1e-14);

  const auto cs = circle_of(64, [](double t) { return std::cos(t); });
  const auto g = gamma_delta(cs, cs);
  for (int j = 0; j < 64; ++j) {
    const double s = std::sin(2.0 * pi * j / 64);
    CHECK(g.data()[j] == doctest::Approx(s * s).epsilon(1e-12));
  }

  const auto P1 = SphereFunction::zonal(Dimension(3), {0.0, 1.0});
  const auto gz = gamma_delta(P1, P1);
  for (double c : {-0.7, 0.0, 0.3, 0.99}) CHECK(gz.at_cosine(c) == doctest::Approx(1.0 - c * c).epsilon(1e-13));

  const auto spec = btilde_spectrum(constant(3), 16);
  const auto G2 = gamma2_mixed(spec, p2(3), p2(3));
  const double ck = ck_curvature(constant(3));
  CHECK(ck == doctest::Approx(2.0 * pi / 3.0).epsilon(1e-12));
  CHECK(integrate(G2) >= ck * integrate(gamma_delta(p2(3), p2(3))) * (1 - 1e-12));
  CHECK(std::abs(integrate(gamma2_mixed(spec, p2(3), one))) < 1e-13);

  const auto F = random_positive(Dimension(3), 11);
  const auto G = random_positive(Dimension(3), 12);
  const auto specL = btilde_spectrum(constant(3), F.band_limit() + G.band_limit());
  const auto fg = gamma2_mixed(specL, F, G);
  const auto gf = gamma2_mixed(specL, G, F);
  CHECK(max_abs_diff(fg, gf) < 1e-10);
  CHECK(fg.even());
}

TEST_CASE("fisher and entropy") {
  const auto one = circle_of(64, [](double) { return 3.0; });
  CHECK(fisher(one) == doctest::Approx(0.0));
  CHECK(entropy(one) == doctest::Approx(2 * pi * 3 * std::log(3.0)));

  const double eps = 1e-3;
  const auto g = circle_of(64, [&](double t) { return eps * std::cos(2 * t); });
  const auto F = SphereFunction::exp_of(g);
  // exact expansion: 4 pi eps^2 (1 + eps^2 / 4 + ...)
  CHECK(std::abs(fisher(F) - 4 * pi * eps * eps) < 1e-10);

  const auto Fz = random_positive(Dimension(3), 3);
  std::vector<double> scaled(Fz.data().begin(), Fz.data().end());
  for (double& a : scaled) a *= 2.5;
  CHECK(fisher(SphereFunction::zonal(Dimension(3), scaled)) == doctest::Approx(2.5 * fisher(Fz)).epsilon(1e-10));
  CHECK(fisher(Fz) == doctest::Approx(fisher(SphereFunction::zonal(Dimension(3), {Fz.data().begin(), Fz.data().end()}))).epsilon(1e-10));

  CHECK_THROWS_AS((void)fisher(circle_of(16, [](double t) { return std::cos(2 * t); })), NonPositive);
  CHECK_THROWS_AS((void)fisher(SphereFunction::zonal(Dimension(3), {0.0, 0.0, 1.0})), NonPositive);
}

TEST_CASE("hardy sides") {
  const auto k = KernelSpec(Dimension(3), PowerLaw{0.25, 0.0});
  const auto spec = btilde_spectrum(k, 40);
  const double cp = cp_spectral(spec);
  double best = 0.0;
  for (int l = 2; l <= 20; l += 2) {
    std::vector<double> a(l + 1, 0.0);
    a[l] = 1.0;
    const auto rep = hardy_sides(spec, SphereFunction::zonal(Dimension(3), a), cp);
    CHECK(rep.ratio == doctest::Approx(2 * spec[l] / laplace_eigenvalue(Dimension(3), l)).epsilon(1e-13));
    CHECK(rep.margin >= -1e-12 * rep.rhs);
    best = std::max(best, rep.ratio);
  }
  CHECK(best == doctest::Approx(cp).epsilon(1e-10));
  const auto zero = hardy_sides(spec, SphereFunction::zonal(Dimension(3), {1.0}), cp);
  CHECK(zero.lhs == 0.0);
  CHECK(zero.rhs == 0.0);

  const auto spec2 = btilde_spectrum(constant(2), 40);
  const auto c4 = circle_of(64, [](double t) { return 1.0 + std::cos(4 * t); });
  CHECK(hardy_sides(spec2, c4, 0.0).ratio == doctest::Approx(2 * spec2[4] / 16.0).epsilon(1e-12));
}

TEST_CASE("Dirichlet form identity") {
  for (const auto& k : {constant(3), KernelSpec(Dimension(3), PowerLaw{0.25, 0.0}),
                        KernelSpec(Dimension(4), HardSphere{}), KernelSpec(Dimension(3), PowerLaw{0.75, -2.0})}) {
    CAPTURE(k.id());
    const auto F = random_positive(k.dim(), 21, 1.5);
    const auto spec = btilde_spectrum(k, F.band_limit());
    const auto rep = dirichlet_form_check(spec, k, F);
    CHECK(rep.rel_error < 1e-8);
  }
  const auto k2 = KernelSpec(Dimension(2), SubordinatedKernel{WeightSpec(ExponentialWeight{1.0, 1.0})});
  const auto F2 = random_positive(Dimension(2), 22, 1.5, 64);
  const auto rep2 = dirichlet_form_check(btilde_spectrum(k2, 32), k2, F2);
  CHECK(rep2.rel_error < 1e-8);
}

TEST_CASE("log-Sobolev sides") {
  SUBCASE("constant function") {
    const auto spec = btilde_spectrum(constant(3), 8);
    const auto rep = logsob_sides(spec, constant(3), SphereFunction::zonal(Dimension(3), {1.0}));
    CHECK(std::abs(rep.lhs) < 1e-14);
    CHECK(std::abs(rep.rhs) < 1e-14);
  }
  SUBCASE("direct kernel quadrature agrees with the spectral form") {
    const auto k = KernelSpec(Dimension(3), PowerLaw{0.25, 0.0});
    const auto F = random_positive(Dimension(3), 5, 2.0);
    const auto spec = btilde_spectrum(k, 128);
    LogSobOptions opts;
    opts.crosscheck = true;
    const auto rep = logsob_sides(spec, k, F, opts);
    CHECK(rep.rhs > 0.0);
    CHECK(rep.rhs_check == doctest::Approx(rep.rhs).epsilon(1e-8));
  }
  SUBCASE("two-point reduction matches Monte Carlo on S^2") {
    const auto k = constant(3);
    const auto F = random_positive(Dimension(3), 6, 2.0);
    const auto spec = btilde_spectrum(k, 128);
    const auto rep = logsob_sides(spec, k, F);
    std::mt19937_64 rng(99);
    std::normal_distribution<double> nd;
    auto unit = [&] {
      Eigen::Vector3d v(nd(rng), nd(rng), nd(rng));
      return Eigen::Vector3d(v.normalized());
    };
    const int n = 400000;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
      const double a = F.at_cosine(unit().x()), b = F.at_cosine(unit().x());
      acc += (a - b) * (a - b) / (a + b);
    }
    const double mc = acc / n * 16 * pi * pi;
    CHECK(mc == doctest::Approx(rep.rhs).epsilon(1e-2));
  }
  SUBCASE("ratios respect the lower bounds") {
    const auto kc = constant(3);
    const auto spec3 = btilde_spectrum(kc, 128);
    const auto ks = KernelSpec(Dimension(2), SubordinatedKernel{WeightSpec(ConstantOnInterval{1.0, 0.1, 1.0})});
    const auto spec2 = btilde_spectrum(ks, 1024);
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      CHECK(logsob_sides(spec3, kc, random_positive(Dimension(3), seed, 2.0)).ratio >= 1.0);
      CHECK(logsob_sides(spec2, ks, random_positive(Dimension(2), seed, 2.0, 128)).ratio >= 2.0);
    }
  }
  SUBCASE("circle needs the spectrum up to the grid size") {
    const auto k = constant(2);
    CHECK_THROWS_AS((void)logsob_sides(btilde_spectrum(KernelSpec(Dimension(2), SubordinatedKernel{WeightSpec(
                                                            ExponentialWeight{1.0, 1.0})}),
                                                        16),
                                        KernelSpec(Dimension(2), SubordinatedKernel{WeightSpec(
                                                                     ExponentialWeight{1.0, 1.0})}),
                                        random_positive(Dimension(2), 1, 1.0, 64)),
                    BandLimitExceeded);
    (void)k;
  }
}

TEST_CASE("Gateaux identity") {
  const auto one = SphereFunction::zonal(Dimension(3), {1.0});
  const auto r0 = gateaux_identity_check(btilde_spectrum(constant(3), 4), one, 1e-5);
  CHECK(r0.analytic == doctest::Approx(0.0));
  CHECK(r0.rel_error == 0.0);

  const auto k2 = constant(2);
  const auto spec2 = btilde_spectrum(k2, 64);
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto F = random_positive(Dimension(2), seed, 2.0, 64);
    const auto rep = gateaux_identity_check(spec2, F, 1e-5);
    CHECK(rep.rel_error <= 1e-6);
  }

  const auto k3 = KernelSpec(Dimension(3), PowerLaw{0.25, 0.0});
  const auto F3 = random_positive(Dimension(3), 7, 2.0);
  const auto spec3 = btilde_spectrum(k3, F3.band_limit());
  const auto rep = gateaux_identity_check(spec3, F3, 1e-3);
  CHECK(rep.rel_error <= 1e-5);
  CHECK(rep.richardson_ratio == doctest::Approx(4.0).epsilon(0.05));

  CHECK_THROWS_AS((void)gateaux_identity_check(spec3, F3, 10.0), StepTooLarge);
}

TEST_CASE("Villani gradient lemma") {
  const auto k = blend_kernel();
  const Eigen::Vector3d sigma(0.0, 0.0, 1.0);
  const Eigen::Vector3d e(1.0, 0.0, 0.0);
  const Eigen::Vector3d axis = Eigen::Vector3d(0.3, 0.5, 0.8).normalized();

  const auto c = villani_gradient_check(k, {axis, {2.0}}, sigma, e, 1e-4);
  CHECK(std::abs(c.finite_difference) < 1e-9);
  CHECK(std::abs(c.quadrature) < 1e-12);

  const auto r1 = villani_gradient_check(k, {axis, {0.0, 1.0}}, sigma, e, 1e-4);
  CHECK(r1.rel_error <= 1e-5);
  const auto r2 = villani_gradient_check(k, {axis, {0.0, 1.0, 0.4, 0.2}}, sigma, e, 1e-2);
  const auto r3 = villani_gradient_check(k, {axis, {0.0, 1.0, 0.4, 0.2}}, sigma, e, 5e-3);
  CHECK(r2.rel_error / r3.rel_error == doctest::Approx(4.0).epsilon(0.05));

  CHECK_THROWS_AS((void)villani_gradient_check(KernelSpec(Dimension(3), PowerLaw{0.25, 0.0}), {axis, {0.0, 1.0}},
                                               sigma, e, 1e-4),
                  KernelNotSmooth);
}

TEST_CASE("empirical lambda") {
  const auto k = constant(3);
  const auto spec = btilde_spectrum(k, 320);
  SamplerSpec s;
  s.seed = 42;
  const auto a = empirical_lambda(spec, k, s, 6, 1);
  const auto b = empirical_lambda(spec, k, s, 6, 3);
  CHECK(a.min_ratio == b.min_ratio);
  CHECK(a.argmin == b.argmin);
  CHECK(a.ratios == b.ratios);
  CHECK(a.min_ratio >= 1.0);
  const auto c = empirical_lambda(spec, k, s, 3, 1);
  CHECK(c.min_ratio >= a.min_ratio);

  // Small single-mode perturbation: the ratio approaches the linearized mode-2 value.
  const double eps = 1e-4;
  const auto F = SphereFunction::exp_of(SphereFunction::zonal(Dimension(3), {0.0, 0.0, eps}));
  const auto rep = logsob_sides(spec, k, F);
  // To second order in eps both sides are multiples of lambda~_2 \int g^2: the
  // left carries lambda_2, the right 1.
  const double linear = laplace_eigenvalue(Dimension(3), 2);
  CHECK(rep.ratio == doctest::Approx(linear).epsilon(1e-3));

  CHECK(derive_seed(1, 0) != derive_seed(1, 1));
  CHECK(derive_seed(1, 5) == derive_seed(1, 5));
}

TEST_CASE("curvature bound on sampled functions") {
  const KernelSpec kernels[] = {constant(3), KernelSpec(Dimension(3), PowerLaw{0.25, 0.0}),
                                KernelSpec(Dimension(4), HardSphere{}),
                                KernelSpec(Dimension(5), SubordinatedKernel{WeightSpec(ExponentialWeight{1.0, 1.0})})};
  for (const auto& k : kernels) {
    CAPTURE(k.id());
    const double ck = ck_curvature(k);
    const auto spec = btilde_spectrum(k, 200);
    for (std::uint64_t seed = 1; seed <= 8; ++seed) {
      const auto F = random_positive(k.dim(), 100 + seed, 3.0);
      CHECK(gamma2_log_integral(spec, F) >= ck * fisher(F) * (1.0 - 1e-6));
    }
  }
}
