#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sphkern/sphere_core.hpp"

namespace sphkern {

/// Zonal Gegenbauer polynomials P_l^{(d)} normalized by P_l(1) = 1.
///
/// For d = 3 these are the Legendre polynomials, for d = 2 the Chebyshev
/// polynomials T_l. They satisfy
///   P_{l+1}(c) = A_l c P_l(c) - B_l P_{l-1}(c),
///   A_l = (2l+d-2)/(l+d-2),  B_l = l/(l+d-2),
/// with A_0 = 1, B_0 = 0 in every dimension.
class PolyFamily {
 public:
  PolyFamily(Dimension d, int l_max);

  [[nodiscard]] Dimension dim() const noexcept { return d_; }
  [[nodiscard]] int max_degree() const noexcept { return l_max_; }

  /// P_l(c). Exact at c = +-1. Throws DomainError for |c| > 1.
  [[nodiscard]] double eval(int l, double c) const;

  /// P_0(c) .. P_{out.size()-1}(c).
  void eval_all(double c, std::span<double> out) const;

  /// Values and first derivatives of P_0 .. P_{n-1}.
  void eval_all(double c, std::span<double> p, std::span<double> dp) const;

  /// Q_l(c) = (1 - P_l(c)) / (1 - c) for l = 0 .. out.size()-1, evaluated by
  /// its own recurrence so that no cancellation occurs near c = 1.
  void one_minus_ratio_all(double c, std::span<double> out) const;

  /// Sum_l coeffs[l] P_l(c) by Clenshaw summation.
  [[nodiscard]] double series(std::span<const double> coeffs, double c) const;

 private:
  void check_degree(std::size_t n) const;

  Dimension d_;
  int l_max_;
  std::vector<double> a_;
  std::vector<double> b_;
};

/// lambda_l = l (l + d - 2), the eigenvalue of -Laplace-Beltrami on degree-l harmonics.
double laplace_eigenvalue(Dimension d, int l);

/// Dimension of the space of degree-l spherical harmonics on S^{d-1}.
std::int64_t eigenspace_dim(Dimension d, int l);

/// Same count as a double, usable where the integer would overflow.
double eigenspace_dim_real(Dimension d, int l);

struct EigenData {
  int l;
  double lambda;
  std::int64_t dim;
};

EigenData eigen_data(Dimension d, int l);

/// Tail tolerance for the heat-kernel series: N(d,L) e^{-lambda_L t} < kHeatTailTol.
inline constexpr double kHeatTailTol = 1e-16;
inline constexpr int kHeatMinModes = 8;

/// Smallest L >= kHeatMinModes meeting the heat-kernel tail bound at time t.
int heat_kernel_modes(Dimension d, double t);

/// Truncated zonal heat kernel
///   u_t(c) = |S^{d-1}|^{-1} sum_{l<=L} N(d,l) e^{-lambda_l t} P_l(c).
/// Throws TruncationError when the tail bound fails at the requested L.
double heat_kernel_profile(Dimension d, double t, double c, int L);

/// Heat kernel with L chosen by heat_kernel_modes().
double heat_kernel_profile(Dimension d, double t, double c);

struct LegendreReport {
  double max_violation = 0.0;
  int worst_l = 1;
  double worst_c = 1.0;
};

/// Maximum over l = 1..l_max and a uniform c-grid of
///   (1 - P_{2l}(c)) / lambda_{2l} - (1 - P_2(c)) / lambda_2.
LegendreReport legendre_inequality_check(Dimension d, int l_max, int grid_size);

}  // namespace sphkern
