#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "sphkern/constants.hpp"
#include "sphkern/errors.hpp"
#include "sphkern/flow.hpp"
#include "sphkern/gegenbauer.hpp"

using namespace sphkern;

namespace {

SphereFunction sample(Dimension d, std::uint64_t seed, double amplitude = 2.0) {
  SamplerSpec s;
  s.bandwidth = 6;
  s.amplitude = amplitude;
  s.circle_grid = 128;
  std::mt19937_64 rng(seed);
  return SphereFunction::exp_of(random_even_exponent(d, s, rng));
}

std::vector<double> grid(double t_max, int n) {
  std::vector<double> t(n + 1);
  for (int i = 0; i <= n; ++i) t[i] = t_max * i / n;
  return t;
}

KernelSpec constant(int d) { return KernelSpec(Dimension(d), ConstantKernel{1.0}); }

}  // namespace

TEST_CASE("equilibrium is fixed") {
  const auto one = SphereFunction::zonal(Dimension(3), {0.5});
  const auto times = grid(1.0, 4);
  for (const FlowGenerator& g : {FlowGenerator(HeatFlow{}), FlowGenerator(btilde_spectrum(constant(3), 4))}) {
    const auto run = evolve(g, one, times);
    for (std::size_t i = 0; i < times.size(); ++i) {
      CHECK(run.fisher_series[i] == 0.0);
      CHECK(run.mass_series[i] == doctest::Approx(2.0 * std::numbers::pi));
    }
    CHECK(fisher_decay_check(run, Dimension(3)).holds);
  }
}

TEST_CASE("heat flow linearization") {
  const double eps = 1e-4;
  for (int l : {2, 4}) {
    std::vector<double> a(l + 1, 0.0);
    a[0] = 1.0;
    a[l] = eps;
    const auto F0 = SphereFunction::zonal(Dimension(3), a);
    const auto run = evolve(HeatFlow{}, F0, std::vector<double>{0.0, 0.05, 0.1});
    const double lam = laplace_eigenvalue(Dimension(3), l);
    for (std::size_t i = 1; i < run.times.size(); ++i)
      CHECK(run.fisher_series[i] / run.fisher_series[0] ==
            doctest::Approx(std::exp(-2.0 * lam * run.times[i])).epsilon(10 * eps));
    CHECK(lam >= lambda_delta(Dimension(3)));
    CHECK(fisher_decay_check(run, Dimension(3), 1e-3).holds);
  }
}

TEST_CASE("B-flow monotonicity and mass") {
  const auto F0 = SphereFunction::exp_of(SphereFunction::zonal(Dimension(3), {0.0, 0.0, 0.5}));
  const auto spec = btilde_spectrum(constant(3), F0.band_limit());
  const auto run = evolve(spec, F0, grid(1.0, 20));
  for (std::size_t i = 1; i < run.times.size(); ++i) {
    CHECK(run.fisher_series[i] <= run.fisher_series[i - 1]);
    CHECK(std::abs(run.mass_series[i] - run.mass_series[0]) <= 1e-12 * run.mass_series[0]);
  }

  const KernelSpec kernels[] = {KernelSpec(Dimension(3), PowerLaw{0.25, 0.0}), KernelSpec(Dimension(4), HardSphere{}),
                                KernelSpec(Dimension(2), SubordinatedKernel{WeightSpec(ExponentialWeight{1.0, 1.0})})};
  for (const auto& k : kernels) {
    CAPTURE(k.id());
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      const auto F = sample(k.dim(), seed);
      const auto sp = btilde_spectrum(k, std::max(F.band_limit(), 64));
      const auto r = evolve(sp, F, grid(0.5, 10), false);
      CHECK(r.entropy_series.empty());
      for (std::size_t i = 1; i < r.times.size(); ++i) {
        CHECK(r.fisher_series[i] <= r.fisher_series[i - 1] + 1e-10 * r.fisher_series[0]);
        CHECK(std::abs(r.mass_series[i] - r.mass_series[0]) <= 1e-12 * r.mass_series[0]);
      }
    }
  }
}

TEST_CASE("heat flow decay bound and monotonicity") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto F0 = sample(Dimension(3), seed);
    const auto run = evolve(HeatFlow{}, F0, grid(1.0, 25));
    const auto rep = fisher_decay_check(run, Dimension(3));
    CHECK(rep.lambda_delta == doctest::Approx(5.5));
    CHECK(rep.holds);
    for (std::size_t i = 1; i < run.times.size(); ++i) CHECK(run.fisher_series[i] <= run.fisher_series[i - 1] + 1e-12);
    for (double e : run.entropy_series) CHECK(std::isfinite(e));
  }
  const auto F2 = sample(Dimension(2), 9);
  CHECK(fisher_decay_check(evolve(HeatFlow{}, F2, grid(1.0, 10)), Dimension(2)).holds);
}

TEST_CASE("semigroup property") {
  const auto F0 = sample(Dimension(3), 4);
  const auto spec = btilde_spectrum(KernelSpec(Dimension(3), PowerLaw{0.25, 0.0}), F0.band_limit());
  for (const FlowGenerator& g : {FlowGenerator(HeatFlow{}), FlowGenerator(spec)}) {
    const auto a = evolve_to(g, evolve_to(g, F0, 0.2), 0.3);
    const auto b = evolve_to(g, F0, 0.5);
    for (std::size_t l = 0; l < a.data().size(); ++l)
      CHECK(std::abs(a.data()[l] - b.data()[l]) <= 1e-13 * std::abs(b.data()[0]));
  }
}

TEST_CASE("input validation") {
  const auto F0 = sample(Dimension(3), 1);
  CHECK_THROWS_AS((void)evolve(HeatFlow{}, F0, std::vector<double>{0.0, 0.5, 0.5}), DomainError);
  CHECK_THROWS_AS((void)evolve(HeatFlow{}, F0, std::vector<double>{}), DomainError);
  CHECK_THROWS_AS((void)evolve_to(btilde_spectrum(constant(3), 2), F0, 0.1), BandLimitExceeded);
  // A truncated profile that dips below zero must be reported, not smoothed over.
  const auto bad = SphereFunction::zonal(Dimension(3), {1.0, 0.0, -1.2});
  CHECK_THROWS_AS((void)evolve(HeatFlow{}, bad, std::vector<double>{0.0}), PositivityLost);
}

TEST_CASE("convexity along a step") {
  const auto spec = btilde_spectrum(constant(2), 64);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto F = sample(Dimension(2), seed);
    const auto rep = convexity_step_check(spec, F, 0.1);
    CHECK(rep.gap >= -1e-6);
    CHECK(rep.increment <= 0.0);
  }
  const auto one = SphereFunction::circle(std::vector<double>(64, 1.0));
  const auto c = convexity_step_check(spec, one, 0.1);
  CHECK(c.gap == doctest::Approx(0.0));
  const auto small = convexity_step_check(spec, sample(Dimension(2), 3), 1e-6);
  CHECK(std::abs(small.increment) < 1e-3);
  CHECK(std::abs(small.directional) < 1e-3);
}
