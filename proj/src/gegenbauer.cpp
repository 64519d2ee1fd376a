#include "sphkern/gegenbauer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "sphkern/errors.hpp"

namespace sphkern {

PolyFamily::PolyFamily(Dimension d, int l_max) : d_(d), l_max_(l_max) {
  if (l_max < 0) throw DomainError("polynomial degree must be >= 0");
  const int dd = d.value();
  a_.resize(l_max + 2);
  b_.resize(l_max + 2);
  a_[0] = 1.0;
  b_[0] = 0.0;
  for (int l = 1; l < l_max + 2; ++l) {
    a_[l] = static_cast<double>(2 * l + dd - 2) / (l + dd - 2);
    b_[l] = static_cast<double>(l) / (l + dd - 2);
  }
}

void PolyFamily::check_degree(std::size_t n) const {
  if (n > static_cast<std::size_t>(l_max_) + 1)
    throw DomainError("degree " + std::to_string(n - 1) + " exceeds family maximum " +
                      std::to_string(l_max_));
}

double PolyFamily::eval(int l, double c) const {
  if (l < 0) throw DomainError("negative polynomial degree");
  if (!(std::abs(c) <= 1.0)) throw DomainError("Gegenbauer argument outside [-1,1]");
  check_degree(static_cast<std::size_t>(l) + 1);
  if (c == 1.0) return 1.0;
  if (c == -1.0) return (l % 2 == 0) ? 1.0 : -1.0;
  double pm = 0.0, p = 1.0;
  for (int k = 0; k < l; ++k) {
    const double pn = a_[k] * c * p - b_[k] * pm;
    pm = p;
    p = pn;
  }
  return p;
}

void PolyFamily::eval_all(double c, std::span<double> out) const {
  if (out.empty()) return;
  if (!(std::abs(c) <= 1.0)) throw DomainError("Gegenbauer argument outside [-1,1]");
  check_degree(out.size());
  out[0] = 1.0;
  if (out.size() > 1) out[1] = c;
  for (std::size_t k = 1; k + 1 < out.size(); ++k) out[k + 1] = a_[k] * c * out[k] - b_[k] * out[k - 1];
  if (c == 1.0 || c == -1.0) {
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = (c > 0.0 || k % 2 == 0) ? 1.0 : -1.0;
  }
}

void PolyFamily::eval_all(double c, std::span<double> p, std::span<double> dp) const {
  if (p.size() != dp.size()) throw DomainError("value and derivative spans differ in length");
  eval_all(c, p);
  if (dp.empty()) return;
  dp[0] = 0.0;
  if (dp.size() > 1) dp[1] = 1.0;
  for (std::size_t k = 1; k + 1 < dp.size(); ++k)
    dp[k + 1] = a_[k] * (p[k] + c * dp[k]) - b_[k] * dp[k - 1];
}

void PolyFamily::one_minus_ratio_all(double c, std::span<double> out) const {
  if (out.empty()) return;
  if (!(std::abs(c) <= 1.0)) throw DomainError("Gegenbauer argument outside [-1,1]");
  check_degree(out.size());
  out[0] = 0.0;
  if (out.size() > 1) out[1] = 1.0;
  for (std::size_t k = 1; k + 1 < out.size(); ++k)
    out[k + 1] = a_[k] * (1.0 + c * out[k]) - b_[k] * out[k - 1];
}

double PolyFamily::series(std::span<const double> coeffs, double c) const {
  if (coeffs.empty()) return 0.0;
  if (!(std::abs(c) <= 1.0)) throw DomainError("Gegenbauer argument outside [-1,1]");
  check_degree(coeffs.size());
  const std::size_t n = coeffs.size() - 1;
  if (n == 0) return coeffs[0];
  double b1 = 0.0, b2 = 0.0;
  for (std::size_t k = n; k >= 1; --k) {
    const double bk = coeffs[k] + a_[k] * c * b1 - b_[k + 1] * b2;
    b2 = b1;
    b1 = bk;
  }
  return coeffs[0] + c * b1 - b_[1] * b2;
}

double laplace_eigenvalue(Dimension d, int l) {
  if (l < 0) throw DomainError("negative degree");
  return static_cast<double>(l) * (l + d.value() - 2);
}

namespace {

std::int64_t binomial(std::int64_t n, std::int64_t k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  __int128 r = 1;
  for (std::int64_t i = 1; i <= k; ++i) {
    r = r * (n - k + i) / i;
    if (r > std::numeric_limits<std::int64_t>::max())
      throw OutOfRange("eigenspace dimension overflows 64-bit integers");
  }
  return static_cast<std::int64_t>(r);
}

}  // namespace

std::int64_t eigenspace_dim(Dimension d, int l) {
  if (l < 0) throw DomainError("negative degree");
  if (l == 0) return 1;
  const int dd = d.value();
  return binomial(l + dd - 2, l) + binomial(l + dd - 3, l - 1);
}

double eigenspace_dim_real(Dimension d, int l) {
  if (l < 0) throw DomainError("negative degree");
  if (l == 0) return 1.0;
  if (d.value() == 2) return 2.0;
  // N(d,l) = (2l+d-2)/(l+d-2) * C(l+d-2, l)
  const int dd = d.value();
  const double log_binom = std::lgamma(l + dd - 1.0) - std::lgamma(l + 1.0) - std::lgamma(dd - 1.0);
  return (2.0 * l + dd - 2.0) / (l + dd - 2.0) * std::exp(log_binom);
}

EigenData eigen_data(Dimension d, int l) {
  return EigenData{l, laplace_eigenvalue(d, l), eigenspace_dim(d, l)};
}

namespace {

bool heat_tail_ok(Dimension d, double t, int L) {
  return eigenspace_dim_real(d, L) * std::exp(-laplace_eigenvalue(d, L) * t) < kHeatTailTol;
}

}  // namespace

int heat_kernel_modes(Dimension d, double t) {
  if (!(t > 0.0)) throw DomainError("heat kernel needs t > 0");
  constexpr int kMaxModes = 1 << 20;
  int L = kHeatMinModes;
  while (!heat_tail_ok(d, t, L)) {
    if (L >= kMaxModes) throw TruncationError("heat kernel needs more than 2^20 modes at t=" + std::to_string(t));
    L = L < 64 ? L + 1 : L + L / 8;
  }
  return L;
}

double heat_kernel_profile(Dimension d, double t, double c, int L) {
  if (!(t > 0.0)) throw DomainError("heat kernel needs t > 0");
  if (L < 0) throw DomainError("negative truncation degree");
  if (!heat_tail_ok(d, t, L))
    throw TruncationError("heat kernel tail bound not met at L=" + std::to_string(L) +
                          ", t=" + std::to_string(t));
  const PolyFamily fam(d, L);
  std::vector<double> coeffs(L + 1);
  for (int l = 0; l <= L; ++l)
    coeffs[l] = eigenspace_dim_real(d, l) * std::exp(-laplace_eigenvalue(d, l) * t);
  // The kernel is strictly positive; a negative sum is rounding in the
  // cancellation of large alternating terms at small t.
  return std::max(0.0, fam.series(coeffs, c) / surface_area(d.value()));
}

double heat_kernel_profile(Dimension d, double t, double c) {
  return heat_kernel_profile(d, t, c, heat_kernel_modes(d, t));
}

LegendreReport legendre_inequality_check(Dimension d, int l_max, int grid_size) {
  if (l_max < 1) throw DomainError("legendre check needs l_max >= 1");
  if (grid_size < 3) throw DomainError("legendre check needs at least 3 grid points");
  const PolyFamily fam(d, 2 * l_max);
  std::vector<double> q(2 * l_max + 1);
  LegendreReport rep;
  rep.max_violation = -std::numeric_limits<double>::infinity();
  const double lambda2 = laplace_eigenvalue(d, 2);
  for (int j = 0; j < grid_size; ++j) {
    const double c = -1.0 + 2.0 * j / (grid_size - 1);
    // Even-degree polynomials are even in c; evaluate at |c| so that 1 - P is
    // formed as (1-|c|) Q(|c|) without cancellation.
    const double x = std::abs(c);
    fam.one_minus_ratio_all(x, q);
    const double ref = (1.0 - x) * q[2] / lambda2;
    for (int l = 1; l <= l_max; ++l) {
      const double v = (1.0 - x) * q[2 * l] / laplace_eigenvalue(d, 2 * l) - ref;
      if (v > rep.max_violation) {
        rep.max_violation = v;
        rep.worst_l = l;
        rep.worst_c = c;
      }
    }
  }
  return rep;
}

}  // namespace sphkern
