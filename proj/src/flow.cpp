#include "sphkern/flow.hpp"

#include <cmath>

#include "sphkern/constants.hpp"
#include "sphkern/errors.hpp"
#include "sphkern/gegenbauer.hpp"

namespace sphkern {

std::string generator_id(const FlowGenerator& g) {
  if (const auto* s = std::get_if<KernelSpectrum>(&g)) return s->kernel_id;
  return "heat";
}

SphereFunction evolve_to(const FlowGenerator& g, const SphereFunction& F0, double t) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw DomainError("flow time must be finite and >= 0");
  if (const auto* spec = std::get_if<KernelSpectrum>(&g)) {
    if (!(spec->d == F0.dim())) throw DomainError("spectrum and function live on different spheres");
    if (F0.band_limit() > spec->max_degree())
      throw BandLimitExceeded("function band " + std::to_string(F0.band_limit()) + " exceeds spectrum degree " +
                              std::to_string(spec->max_degree()));
    return spectral_multiply(F0, [&](int l) {
      const double rate = (*spec)[l];
      if (std::isinf(rate)) {
        if (t == 0.0) return 1.0;
        throw DomainError("the flow has no odd mode " + std::to_string(l) + " for this kernel");
      }
      return std::exp(-rate * t);
    });
  }
  const Dimension d = F0.dim();
  return spectral_multiply(F0, [&](int l) { return std::exp(-laplace_eigenvalue(d, l) * t); });
}

FlowRun evolve(const FlowGenerator& g, const SphereFunction& F0, std::span<const double> times, bool with_entropy) {
  if (times.empty()) throw DomainError("evolve needs at least one time");
  for (std::size_t i = 0; i < times.size(); ++i)
    if (i > 0 && !(times[i] > times[i - 1])) throw DomainError("flow times must increase strictly");

  FlowRun run{generator_id(g), F0, {}, {}, {}, {}};
  const double area = surface_area(F0.dim().value());
  for (double t : times) {
    const SphereFunction Ft = t == 0.0 ? F0 : evolve_to(g, F0, t);
    const double mass = integrate(Ft);
    const double lowest = min_value(Ft);
    if (!(lowest >= kPositivityFloor * mass / area))
      throw PositivityLost("F_t has minimum " + std::to_string(lowest) + " at t=" + std::to_string(t) +
                           "; raise the band limit or lower the amplitude");
    run.times.push_back(t);
    run.mass_series.push_back(mass);
    run.fisher_series.push_back(fisher(Ft));
    if (with_entropy) run.entropy_series.push_back(entropy(Ft));
  }
  return run;
}

DecayReport fisher_decay_check(const FlowRun& run, Dimension d, double tol) {
  DecayReport rep;
  rep.lambda_delta = lambda_delta(d);
  rep.tol = tol;
  if (run.times.empty()) return rep;
  const double t0 = run.times.front();
  const double i0 = run.fisher_series.front();
  for (std::size_t k = 0; k < run.times.size(); ++k) {
    const double bound = std::exp(-2.0 * rep.lambda_delta * (run.times[k] - t0)) * i0;
    const double value = run.fisher_series[k];
    if (value > bound * (1.0 + tol)) {
      ++rep.violations;
      rep.holds = false;
    }
    if (bound > 0.0) {
      const double excess = value / bound - 1.0;
      if (k == 0 || excess > rep.worst_excess) {
        rep.worst_excess = excess;
        rep.worst_time = run.times[k];
      }
    }
  }
  return rep;
}

ConvexityReport convexity_step_check(const KernelSpectrum& spec, const SphereFunction& F, double t, double h) {
  if (!(t > 0.0)) throw DomainError("convexity step needs t > 0");
  if (!(h > 0.0)) throw DomainError("h must be positive");
  const auto Ft = evolve_to(spec, F, t);
  const auto D = Ft.plus(-1.0, F);
  auto quotient = [&](double step) {
    const auto fp = F.plus(step, D);
    const auto fm = F.plus(-step, D);
    if (!(min_value(fp) > 0.0) || !(min_value(fm) > 0.0))
      throw StepTooLarge("F +- h (F_t - F) is not positive at h=" + std::to_string(step));
    return (fisher(fp) - fisher(fm)) / (2.0 * step);
  };
  ConvexityReport rep;
  rep.directional = quotient(h);
  const double half = quotient(0.5 * h);
  const double scale = std::abs(rep.directional);
  if (scale > 0.0 && 4.0 / 3.0 * std::abs(rep.directional - half) > 1e-3 * scale)
    throw StepTooLarge("second-order term of the difference quotient dominates at h=" + std::to_string(h));
  rep.increment = fisher(Ft) - fisher(F);
  rep.gap = rep.increment - rep.directional;
  return rep;
}

}  // namespace sphkern
