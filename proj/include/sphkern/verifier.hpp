#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "sphkern/kernels.hpp"

namespace sphkern {

inline constexpr int kDefaultCircleGrid = 512;

/// A real function on S^{d-1}.
///
/// For d = 2 it is stored by its values at theta_j = 2 pi j / N (N even); for
/// d >= 3 by coefficients a_l in F(sigma) = sum_l a_l P_l(e1 . sigma). Either
/// form may also carry its logarithm in the same representation (grid values
/// or coefficients). Functions built by exp_of() do, which keeps log F exact
/// and lets F be evaluated anywhere as exp(log F).
class SphereFunction {
 public:
  static SphereFunction circle(std::vector<double> values);
  static SphereFunction zonal(Dimension d, std::vector<double> coeffs);
  /// exp(G). Zonal coefficients of exp(G) are projected to the smallest
  /// degree whose tail sits at the rounding floor of the projecting
  /// quadrature, 64 ulp of the coefficient sum times sqrt(N(d,l)).
  static SphereFunction exp_of(const SphereFunction& g);

  [[nodiscard]] Dimension dim() const noexcept { return d_; }
  [[nodiscard]] bool is_circle() const noexcept { return circle_; }
  /// F(-sigma) = F(sigma): antipodal grid values agree within 1e-12 (relative
  /// to max |F|), or odd coefficients vanish to the same tolerance.
  [[nodiscard]] bool even() const noexcept { return even_; }
  /// Grid values (circle) or coefficients (zonal).
  [[nodiscard]] std::span<const double> data() const noexcept { return data_; }
  [[nodiscard]] const std::optional<std::vector<double>>& log_data() const noexcept { return log_; }
  /// N/2 on the circle, highest stored degree for zonal functions.
  [[nodiscard]] int band_limit() const noexcept;
  [[nodiscard]] int grid_size() const noexcept { return circle_ ? static_cast<int>(data_.size()) : 0; }

  /// Zonal value at c = e1.sigma.
  [[nodiscard]] double at_cosine(double c) const;
  /// Circle value at angle theta (trigonometric interpolation).
  [[nodiscard]] double at_angle(double theta) const;

  /// this + a x, dropping any stored logarithm.
  [[nodiscard]] SphereFunction plus(double a, const SphereFunction& x) const;
  /// Trigonometric resampling of a circle function onto M points (M even).
  [[nodiscard]] SphereFunction resampled(int M) const;

 private:
  SphereFunction(Dimension d, bool circle, std::vector<double> data, std::optional<std::vector<double>> log);
  void update_even();

  Dimension d_;
  bool circle_;
  std::vector<double> data_;
  std::optional<std::vector<double>> log_;
  bool even_ = false;
};

/// Zonal function with coefficients obtained by projecting f onto P_0..P_L.
SphereFunction project_zonal(Dimension d, const std::function<double(double)>& f, int L);

/// Coefficient-wise a_l -> m(l) a_l (Fourier modes |k| = l on the circle).
/// Odd modes of even functions are dropped rather than multiplied, so m may
/// be non-finite there.
SphereFunction spectral_multiply(const SphereFunction& F, const std::function<double(int)>& m);

/// B F: coefficient-wise a_l -> -lambda~_l a_l. Throws BandLimitExceeded when
/// F has modes beyond the spectrum.
SphereFunction apply_B(const KernelSpectrum& spec, const SphereFunction& F);

/// Laplace-Beltrami: a_l -> -lambda_l a_l.
SphereFunction apply_laplacian(const SphereFunction& F);

/// Gamma_Delta(F, G) = grad F . grad G; zonal products are re-projected exactly.
SphereFunction gamma_delta(const SphereFunction& F, const SphereFunction& G);

/// Gamma^2_{B,Delta}(F,G) = 1/2 (B Gamma(F,G) - Gamma(BF, G) - Gamma(F, BG)).
SphereFunction gamma2_mixed(const KernelSpectrum& spec, const SphereFunction& F, const SphereFunction& G);

/// \int_{S^{d-1}} F dsigma.
double integrate(const SphereFunction& F);

/// \int |grad log F|^2 F dsigma. Throws NonPositive when F <= 0 somewhere.
double fisher(const SphereFunction& F);

/// \int F log F dsigma.
double entropy(const SphereFunction& F);

/// Smallest sampled value of F (grid values, or a fine zonal quadrature).
double min_value(const SphereFunction& F);

/// \int Gamma^2_{B,Delta}(g, g) F with g = log F, evaluated as
/// 1/2 \int Gamma(g,g) BF - \int Gamma(Bg, g) F.
double gamma2_log_integral(const KernelSpectrum& spec, const SphereFunction& F);

struct InequalityReport {
  double lhs = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;       ///< lhs / rhs (0 when rhs = 0)
  double bound_used = 0.0;  ///< constant the inequality was checked against
  double margin = 0.0;      ///< signed slack; >= 0 means the inequality holds
  /// Independent evaluation of the right side (direct kernel quadrature for
  /// the log-Sobolev form), NaN when not requested.
  double rhs_check = std::numeric_limits<double>::quiet_NaN();
  int resolution = 0;  ///< grid size or node count at which the result settled
};

struct LogSobOptions {
  double lambda = 0.0;        ///< bound checked in `margin`
  bool crosscheck = false;    ///< also compute the right side by direct quadrature
  double settle_tol = 1e-6;   ///< relative agreement required between resolutions
};

/// Both sides of the log-Sobolev inequality
///   \int Gamma^2_{B,Delta}(log F, log F) F >= lambda \iint (F'-F)^2/(F'+F) b.
/// The right side is -sum_l s_l lambda~_l with s_l the P_l-coefficients of the
/// pair average S(c) of (F'-F)^2/(F'+F) over sigma.sigma' = c (S(1) = 0).
/// Circle functions are evaluated at N and 2N points and zonal ones at n and
/// 2n nodes until both sides agree to `settle_tol`.
InequalityReport logsob_sides(const KernelSpectrum& spec, const KernelSpec& k, const SphereFunction& F,
                              const LogSobOptions& opts = {});

/// Spectral Hardy form: lhs = 2 sum lambda~_l |F_l|^2, rhs = sum lambda_l |F_l|^2,
/// checked against c_p (margin = c_p rhs - lhs).
InequalityReport hardy_sides(const KernelSpectrum& spec, const SphereFunction& F, double c_p);

struct DirichletFormReport {
  double spectral = 0.0;  ///< -2 \int F B F from the spectrum
  double direct = 0.0;    ///< \iint (F'-F)^2 b from the kernel itself
  double rel_error = 0.0;
};

/// Dirichlet-form identity \iint (F'-F)^2 b = -2 \int F B F, with the left
/// side computed from the kernel by quadrature and the right from the spectrum.
DirichletFormReport dirichlet_form_check(const KernelSpectrum& spec, const KernelSpec& k, const SphereFunction& F);

struct GateauxReport {
  double finite_difference = 0.0;  ///< [I(F + dt BF) - I(F - dt BF)] / 2dt
  double finite_difference_half = 0.0;
  double analytic = 0.0;  ///< -2 \int Gamma^2(log F, log F) F
  double rel_error = 0.0;
  double richardson_ratio = 0.0;  ///< defect(dt) / defect(dt/2), about 4 when second order
};

/// Throws StepTooLarge when F - dt BF loses positivity or the quadratic term
/// of the difference quotient exceeds 1e-3 of the derivative.
GateauxReport gateaux_identity_check(const KernelSpectrum& spec, const SphereFunction& F, double dt);

/// Zonal profile about an arbitrary axis in R^3: G(sigma) = sum_l a_l P_l(axis . sigma).
struct AxisZonal {
  Eigen::Vector3d axis;
  std::vector<double> coeffs;
};

struct VillaniReport {
  double finite_difference = 0.0;  ///< d/dh of \int G(sigma') b(sigma'.sigma_h) dsigma' along e
  double quadrature = 0.0;         ///< \int [M_{sigma',sigma} grad G(sigma')] . e b dsigma'
  double rel_error = 0.0;          ///< |difference| over max(|sides|, \int |grad G| b)
};

/// Gradient lemma for B on S^2. Needs a kernel that is C^1 on [-1,1].
VillaniReport villani_gradient_check(const KernelSpec& k, const AxisZonal& G, const Eigen::Vector3d& sigma,
                                     const Eigen::Vector3d& e, double h, int nodes = 96);

struct SamplerSpec {
  std::uint64_t seed = 1;
  int bandwidth = 8;        ///< highest even degree / frequency of G
  double amplitude = 3.0;   ///< sup |G| <= amplitude
  int circle_grid = kDefaultCircleGrid;
};

/// Deterministic per-task seed derived from a master seed and an index.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

/// Random even band-limited exponent G on S^{d-1} with sup |G| <= amplitude * u,
/// u uniform in (0, 1].
SphereFunction random_even_exponent(Dimension d, const SamplerSpec& s, std::mt19937_64& rng);

struct EmpiricalReport {
  double min_ratio = 0.0;
  std::size_t argmin = 0;
  std::uint64_t argmin_seed = 0;
  std::size_t samples = 0;
  std::size_t redraws = 0;
  std::vector<double> ratios;
};

/// Minimum of lhs/rhs over n test functions exp(G). Draw i uses
/// derive_seed(seed, i); degenerate draws (rhs < 1e-14) are redrawn. Runs on
/// `threads` workers (0: hardware concurrency); the result does not depend on it.
EmpiricalReport empirical_lambda(const KernelSpectrum& spec, const KernelSpec& k, const SamplerSpec& s, std::size_t n,
                                 unsigned threads = 0);

}  // namespace sphkern
