#pragma once

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace sphkern {

/// Ambient dimension d of R^d. The sphere under study is S^{d-1}, so d >= 2.
class Dimension {
 public:
  explicit Dimension(int d);

  [[nodiscard]] int value() const noexcept { return d_; }
  /// Exponent (d-3)/2 of the zonal measure (1-c^2)^{(d-3)/2} dc.
  [[nodiscard]] double measure_exponent() const noexcept { return 0.5 * (d_ - 3); }

  friend bool operator==(Dimension, Dimension) = default;

 private:
  int d_;
};

/// |S^{d-1}| = 2 pi^{d/2} / Gamma(d/2). Defined for d >= 1 (|S^0| = 2).
double surface_area(int d);

/// Gauss-Jacobi rule on [-1,1] for the weight (1-c)^alpha (1+c)^beta.
///
/// Nodes are strictly increasing and weights strictly positive. Rules are
/// immutable once built.
class QuadratureRule {
 public:
  QuadratureRule(std::vector<double> nodes, std::vector<double> weights,
                 double alpha_exp, double beta_exp);

  [[nodiscard]] std::span<const double> nodes() const noexcept { return nodes_; }
  [[nodiscard]] std::span<const double> weights() const noexcept { return weights_; }
  [[nodiscard]] double alpha_exp() const noexcept { return alpha_; }
  [[nodiscard]] double beta_exp() const noexcept { return beta_; }
  [[nodiscard]] int order() const noexcept { return static_cast<int>(nodes_.size()); }

  /// Sum of w_i f(x_i).
  template <class F>
  double apply(F&& f) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) acc += weights_[i] * f(nodes_[i]);
    return acc;
  }

 private:
  std::vector<double> nodes_;
  std::vector<double> weights_;
  double alpha_;
  double beta_;
};

/// n-point Gauss-Jacobi rule. Rules are memoized; the returned object is shared
/// and never mutated. Throws DivergentIntegral when alpha or beta <= -1.
std::shared_ptr<const QuadratureRule> gauss_jacobi(int n, double alpha, double beta);

/// Gauss-Legendre rule on [-1,1].
inline std::shared_ptr<const QuadratureRule> gauss_legendre(int n) {
  return gauss_jacobi(n, 0.0, 0.0);
}

/// Integrand on [-1,1] of the form (1-c)^exp_plus (1+c)^exp_minus smooth(c).
struct ZonalProfile {
  std::function<double(double)> smooth;
  double exp_plus = 0.0;
  double exp_minus = 0.0;
};

/// Default starting order and tolerance for the adaptive zonal quadrature.
inline constexpr int kDefaultQuadratureOrder = 256;
inline constexpr int kMaxQuadratureOrder = 16384;
inline constexpr double kQuadratureRelTol = 1e-10;

/// Gauss-Jacobi rule whose weight absorbs both the zonal measure factor and
/// the profile's endpoint singularities.
std::shared_ptr<const QuadratureRule> zonal_rule(const ZonalProfile& g, Dimension d, int n);

/// \int_{S^{d-1}} g(e.sigma') dsigma' = |S^{d-2}| \int g(c) (1-c^2)^{(d-3)/2} dc
/// with a caller-supplied rule. The rule's exponents must match zonal_rule().
double zonal_integral(const ZonalProfile& g, Dimension d, const QuadratureRule& rule);

/// Same integral with the order doubled from `start_order` until two successive
/// orders agree to kQuadratureRelTol.
double zonal_integral(const ZonalProfile& g, Dimension d,
                      int start_order = kDefaultQuadratureOrder);

/// Unit-norm and tangency tolerance for constructed inputs.
inline constexpr double kGeometryTol = 1e-12;

/// A vector tangent to the sphere at `base`.
class TangentVector {
 public:
  TangentVector(Eigen::VectorXd base, Eigen::VectorXd dir);

  [[nodiscard]] const Eigen::VectorXd& base() const noexcept { return base_; }
  [[nodiscard]] const Eigen::VectorXd& dir() const noexcept { return dir_; }

 private:
  Eigen::VectorXd base_;
  Eigen::VectorXd dir_;
};

/// M_{sigma',sigma}(x) = (sigma'.sigma) x - (sigma.x) sigma', mapping
/// T_{sigma'} S^{d-1} to T_sigma S^{d-1}. `x.base()` is sigma'.
TangentVector tangent_map(const Eigen::VectorXd& sigma, const TangentVector& x);

/// 1 - |M_{sigma,sigma'}(e)|^2 for a unit tangent e at sigma. Always in [0,1].
double contraction_deficit(const Eigen::VectorXd& sigma, const Eigen::VectorXd& sigma_prime,
                           const Eigen::VectorXd& e);

}  // namespace sphkern
