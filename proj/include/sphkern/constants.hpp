#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "sphkern/kernels.hpp"

namespace sphkern {

/// Lambda_Delta = d + 3 - 1/(d-1), the Gamma^2 constant of the sphere Laplacian.
double lambda_delta(Dimension d);

/// C_K = (d-2)/(2(d-1)) * levy_moment(k). Requires d >= 3.
double ck_curvature(const KernelSpec& k);

/// C_P = levy_moment(k) / (d-1).
double cp_zonal(const KernelSpec& k);

/// C_P = 2 max over even l of lambda~_l / lambda_l.
///
/// The maximum must sit at l = 2 and the even-degree comparison
/// (1-P_{2l})/lambda_{2l} <= (1-P_2)/lambda_2 must hold on the computed range;
/// otherwise the truncated maximum says nothing about the full supremum and
/// TailNotCertified is thrown.
double cp_spectral(const KernelSpectrum& spec);

/// C_K = \int omega(t) (1 - e^{-2 Lambda_Delta t}) / 2 dt.
double ck_subordinated(const WeightSpec& w, Dimension d);

/// C_P = \int omega(t) (1 - e^{-2 d t}) / d dt.
double cp_subordinated(const WeightSpec& w, Dimension d);

/// 2 C_K / C_P for a subordination weight. Infinite-mass weights give the
/// limit of truncations omega 1_{t<T} as T grows, which is d.
double subordination_bound(const WeightSpec& w, Dimension d);

/// alpha(r) = r^gamma.
struct PowerAlpha {
  double gamma = 0.0;
};

/// Samples of alpha and alpha' at increasing radii r > 0.
struct TabulatedAlpha {
  std::vector<double> r;
  std::vector<double> alpha;
  std::vector<double> dalpha;
};

using AlphaSpec = std::variant<PowerAlpha, TabulatedAlpha>;

std::string describe(const AlphaSpec& a);

struct CriterionVerdict {
  std::string alpha_description;
  double sup_quantity = 0.0;  ///< sup r |alpha'(r)| / (2 alpha(r))
  double threshold = 0.0;     ///< sqrt(lambda_b)
  bool passes = false;
};

/// Relative slack in the comparison sup <= sqrt(lambda_b), so that a bound
/// which equals the sup analytically is not lost to rounding.
inline constexpr double kCriterionRelTol = 1e-12;

/// Decides r |alpha'| / (2 alpha) <= sqrt(lambda_b). Power laws use the closed
/// form |gamma|/2; tabulated profiles are scanned on `r_range` (log grid plus
/// golden-section refinement of the best grid point).
CriterionVerdict criterion_check(const AlphaSpec& alpha, double lambda_b,
                                 std::pair<double, double> r_range = {1e-3, 1e3});

struct AssembleOptions {
  /// Highest degree of the spectrum behind c_P_spectral.
  int spectrum_L = 40;
  /// Precomputed spectrum (e.g. from a cache); must belong to the kernel.
  std::optional<KernelSpectrum> spectrum;
  /// Reference kernel for the comparison route.
  std::optional<KernelSpec> reference;
  /// Known lower bound for the reference; derived from its own routes when absent.
  std::optional<double> reference_lambda;
  std::optional<AlphaSpec> alpha;
  std::pair<double, double> r_range{1e-3, 1e3};
  int compare_grid = 4097;
};

struct ConstantsReport {
  int d = 0;
  std::string kernel_id;
  double levy_moment = 0.0;
  std::optional<double> c_K_curvature;
  std::optional<double> c_K_subordinated;
  double c_P_zonal = 0.0;
  std::optional<double> c_P_spectral;
  std::optional<double> c_P_subordinated;
  double lambda_delta = 0.0;
  std::map<std::string, double> lambda_b_routes;
  std::map<std::string, std::string> route_provenance;
  std::optional<KernelComparison> comparison;
  double lambda_b = 0.0;
  std::optional<CriterionVerdict> criterion;
  std::vector<std::string> notes;
};

/// Computes every applicable route and takes the best bound:
///   curvature       2 C_K / C_P = d - 2                      (d >= 3)
///   subordination   2 C_K / C_P from the weight              (subordinated kernels)
///   comparison      (c0 / C0) Lambda_{b0}                    (reference supplied)
///   constant_limit  d, for constant kernels as the limit of
///                   subordinated kernels with flat weights   (d >= 3)
/// Throws NoRouteApplicable when none applies and DivergentIntegral for
/// kernels with an infinite Levy moment.
ConstantsReport assemble_lambda(const KernelSpec& k, const AssembleOptions& opts = {});

}  // namespace sphkern
