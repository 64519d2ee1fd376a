#pragma once

#include <functional>
#include <limits>
#include <string>
#include <variant>
#include <vector>

#include "sphkern/sphere_core.hpp"

namespace sphkern {

// ---------------------------------------------------------------------------
// Subordination weights omega : (0, inf) -> [0, inf)
// ---------------------------------------------------------------------------

/// omega = height on [t_min, t_max], zero elsewhere. t_max may be +inf, in
/// which case the weight has infinite mass.
struct ConstantOnInterval {
  double height = 0.0;
  double t_min = 0.0;
  double t_max = 0.0;
};

/// omega(t) = scale * exp(-rate t).
struct ExponentialWeight {
  double rate = 1.0;
  double scale = 0.0;
};

/// Piecewise-linear interpolation of (t, omega) samples, zero outside the table.
struct TabulatedWeight {
  std::vector<double> t;
  std::vector<double> omega;
};

class WeightSpec {
 public:
  using Variant = std::variant<ConstantOnInterval, ExponentialWeight, TabulatedWeight>;

  explicit WeightSpec(Variant v);

  [[nodiscard]] const Variant& variant() const noexcept { return v_; }
  [[nodiscard]] std::string name() const;

  [[nodiscard]] double operator()(double t) const;

  /// True when \int omega dt < inf.
  [[nodiscard]] bool finite_mass() const;
  /// Left end of the support; 0 when omega charges every neighbourhood of 0.
  [[nodiscard]] double support_min() const;
  [[nodiscard]] double support_max() const;
  [[nodiscard]] bool is_zero() const;

  /// \int_{t_lower}^\infty omega(t) g(t) dt. The range (0,1] is integrated in
  /// u = log t, [1, inf) directly, with panels split at omega's breakpoints and
  /// halved until two passes agree. Throws DivergentIntegral for infinite mass.
  [[nodiscard]] double integrate(const std::function<double(double)>& g, double t_lower = 0.0) const;

 private:
  [[nodiscard]] std::vector<double> breakpoints(double t_lower) const;

  Variant v_;
};

// ---------------------------------------------------------------------------
// Collision kernels b(c), c = sigma . sigma'
// ---------------------------------------------------------------------------

/// b(c) = 2^{d-3} (1-c)^{(3-d)/2}.
struct HardSphere {};

/// b(c) = (1-c^2)^{-(d-1+2s)/2}; gamma is the matching velocity exponent.
struct PowerLaw {
  double s = 0.5;
  double gamma = -1.0;
};

struct ConstantKernel {
  double value = 1.0;
};

/// b(c) = \int_0^\infty u_t(c) omega(t) dt.
struct SubordinatedKernel {
  WeightSpec weight;
};

/// b(c) = (1-c)^{exp_plus} (1+c)^{exp_minus} s(c), with s interpolated from
/// samples (c_i, s_i) spanning [-1, 1].
struct TabulatedKernel {
  std::vector<double> c;
  std::vector<double> values;
  double exp_plus = 0.0;
  double exp_minus = 0.0;
};

/// Endpoint behaviour b(c) ~ (1-c)^plus near c = 1 and (1+c)^minus near c = -1.
struct EndpointExponents {
  double plus = 0.0;
  double minus = 0.0;
};

class KernelSpec {
 public:
  using Variant = std::variant<HardSphere, PowerLaw, ConstantKernel, SubordinatedKernel, TabulatedKernel>;

  KernelSpec(Dimension d, Variant v);

  [[nodiscard]] Dimension dim() const noexcept { return d_; }
  [[nodiscard]] const Variant& variant() const noexcept { return v_; }
  /// Variant tag as used in configuration files ("hard_sphere", "power_law", ...).
  [[nodiscard]] std::string name() const;
  /// Short human-readable identifier, e.g. "power_law(s=0.5)/d=3".
  [[nodiscard]] std::string id() const;

  [[nodiscard]] EndpointExponents exponents() const;
  /// The factor s(c) in b(c) = (1-c)^plus (1+c)^minus s(c).
  [[nodiscard]] double smooth_part(double c) const;
  [[nodiscard]] double operator()(double c) const;

  [[nodiscard]] bool is_constant() const;
  [[nodiscard]] const WeightSpec* weight() const;
  /// Finite and continuously differentiable on all of [-1, 1].
  [[nodiscard]] bool is_smooth() const;

 private:
  Dimension d_;
  Variant v_;
  std::function<double(double)> interp_;
};

/// b(c), possibly +inf at the endpoints for singular kernels.
double kernel_eval(const KernelSpec& k, double c);

struct PowerLawParams {
  double gamma;
  double s;
};

/// Inverse power law q -> (gamma, s) with 2s = (d-1)/(q-1), gamma = 1 - 4s.
/// Requires q > d-1 and q >= (d+1)/2.
PowerLawParams power_law_params(double q, Dimension d);

/// \int_{S^{d-1}} (1 - (e.sigma')^2) b(e.sigma') dsigma'.
/// Throws DivergentIntegral when the moment is infinite.
double levy_moment(const KernelSpec& k);

/// b(c) + b(-c).
double symmetrized(const KernelSpec& k, double c);

struct KernelComparison {
  double c0;  ///< inf of the symmetrized ratio
  double C0;  ///< sup of the symmetrized ratio
};

/// Extremes of [b(c)+b(-c)] / [b0(c)+b0(-c)] over [-1,1]: a Chebyshev grid of
/// `grid` interior points, endpoint limits, and local refinement; the grid is
/// doubled until both extremes move by less than 1e-8.
KernelComparison compare_kernels(const KernelSpec& k, const KernelSpec& k0, int grid = 4097);

/// Funk-Hecke eigenvalues lambda~_0 .. lambda~_L of the spherical operator B
/// (B Y_l = -lambda~_l Y_l). Odd entries are +inf when b is too singular at
/// c = -1 for them to exist; even functions never see those modes.
struct KernelSpectrum {
  Dimension d{2};
  std::vector<double> values;
  int quadrature_order = 0;  ///< order of the final rule; 0 for the t-integral route
  double alpha_exp = 0.0;    ///< Jacobi exponents of the even-degree rule
  double beta_exp = 0.0;
  std::string kernel_id;

  [[nodiscard]] int max_degree() const noexcept { return static_cast<int>(values.size()) - 1; }
  [[nodiscard]] double operator[](int l) const { return values.at(static_cast<std::size_t>(l)); }
};

/// Spectrum up to degree L. Zonal kernels use Gauss-Jacobi quadrature of
/// (1 - P_l) b with the cancellation at c = 1 removed analytically, doubling
/// from `start_order`; subordinated kernels integrate omega(t)(1 - e^{-lambda_l t}).
KernelSpectrum btilde_spectrum(const KernelSpec& k, int L, int start_order = kDefaultQuadratureOrder);

/// b_omega(c) = \int_0^\infty u_t(c) omega(t) dt by nested quadrature over t.
double subordinated_profile(const WeightSpec& w, Dimension d, double c);

}  // namespace sphkern
