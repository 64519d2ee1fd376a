#pragma once

#include <span>
#include <string>
#include <variant>
#include <vector>

#include "sphkern/verifier.hpp"

namespace sphkern {

/// Heat semigroup e^{t Delta}: a_l(t) = e^{-lambda_l t} a_l(0).
struct HeatFlow {};

/// Generator of the flow: the Laplace-Beltrami operator or the operator B of
/// a kernel, given through its spectrum (a_l(t) = e^{-lambda~_l t} a_l(0)).
using FlowGenerator = std::variant<HeatFlow, KernelSpectrum>;

std::string generator_id(const FlowGenerator& g);

struct FlowRun {
  std::string kernel_id;
  SphereFunction initial;
  std::vector<double> times;
  std::vector<double> fisher_series;
  std::vector<double> mass_series;
  std::vector<double> entropy_series;  ///< empty when not requested
};

/// Positivity threshold for evolved functions, relative to their mean.
inline constexpr double kPositivityFloor = 1e-10;

/// F_t for a single time t >= 0 (exact in spectral space).
SphereFunction evolve_to(const FlowGenerator& g, const SphereFunction& F0, double t);

/// Diagnostics of F_t at every requested time. Times must be >= 0 and
/// strictly increasing. Throws PositivityLost when some F_t dips below
/// kPositivityFloor times its mean, which only happens through truncation.
FlowRun evolve(const FlowGenerator& g, const SphereFunction& F0, std::span<const double> times,
               bool with_entropy = true);

struct DecayReport {
  double lambda_delta = 0.0;
  double tol = 0.0;
  bool holds = true;
  std::size_t violations = 0;
  double worst_excess = 0.0;  ///< max of I(F_t) / (e^{-2 Lambda t} I(F_0)) - 1
  double worst_time = 0.0;
};

/// I(F_t) <= e^{-2 Lambda_Delta t} I(F_0) (1 + tol) at every recorded time.
/// The first recorded time is taken as the origin of the run.
DecayReport fisher_decay_check(const FlowRun& run, Dimension d, double tol = 1e-3);

struct ConvexityReport {
  double increment = 0.0;    ///< I(F_t) - I(F)
  double directional = 0.0;  ///< <I'(F), F_t - F> by centered difference
  double gap = 0.0;          ///< increment - directional, >= 0 for convex I
};

/// Convexity of the Fisher information along one step of the B-flow. The
/// directional derivative uses F +- h (F_t - F); throws StepTooLarge under the
/// same conditions as gateaux_identity_check.
ConvexityReport convexity_step_check(const KernelSpectrum& spec, const SphereFunction& F, double t, double h = 1e-4);

}  // namespace sphkern
