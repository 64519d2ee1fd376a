#include "sphkern/sphere_core.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <string>
#include <tuple>

#include "sphkern/errors.hpp"

namespace sphkern {

Dimension::Dimension(int d) : d_(d) {
  if (d < 2) throw DomainError("dimension d must be >= 2, got " + std::to_string(d));
}

double surface_area(int d) {
  if (d < 1) throw DomainError("surface_area needs d >= 1");
  const double half = 0.5 * d;
  return 2.0 * std::pow(std::numbers::pi, half) / std::tgamma(half);
}

QuadratureRule::QuadratureRule(std::vector<double> nodes, std::vector<double> weights,
                               double alpha_exp, double beta_exp)
    : nodes_(std::move(nodes)), weights_(std::move(weights)), alpha_(alpha_exp), beta_(beta_exp) {
  if (nodes_.size() != weights_.size() || nodes_.empty())
    throw DomainError("quadrature rule needs matching, non-empty node and weight lists");
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (!(weights_[i] > 0.0)) throw DomainError("quadrature weights must be positive");
    if (!(nodes_[i] > -1.0 && nodes_[i] < 1.0)) throw DomainError("quadrature nodes must lie in (-1,1)");
    if (i > 0 && !(nodes_[i] > nodes_[i - 1]))
      throw DomainError("quadrature nodes must be strictly increasing");
  }
}

namespace {

// Three-term recurrence of the Jacobi polynomials, orthonormal with respect to
// the normalized weight: x p_k = b_{k+1} p_{k+1} + a_k p_k + b_k p_{k-1}.
double jacobi_a(int k, double al, double be) {
  if (k == 0) return (be - al) / (al + be + 2.0);
  const double s = 2.0 * k + al + be;
  return (be * be - al * al) / (s * (s + 2.0));
}

double jacobi_b(int k, double al, double be) {
  if (k == 1) {
    const double s = 2.0 + al + be;
    return std::sqrt(4.0 * (1.0 + al) * (1.0 + be) / (s * s * (s + 1.0)));
  }
  const double s = 2.0 * k + al + be;
  return std::sqrt(4.0 * k * (k + al) * (k + be) * (k + al + be) / (s * s * (s + 1.0) * (s - 1.0)));
}

std::shared_ptr<const QuadratureRule> build_gauss_jacobi(int n, double al, double be) {
  std::vector<double> a(n), b(n + 1, 0.0);
  for (int k = 0; k < n; ++k) a[k] = jacobi_a(k, al, be);
  for (int k = 1; k <= n; ++k) b[k] = jacobi_b(k, al, be);

  std::vector<double> x(n);
  if (n == 1) {
    x[0] = a[0];
  } else {
    Eigen::VectorXd diag(n), sub(n - 1);
    for (int k = 0; k < n; ++k) diag[k] = a[k];
    for (int k = 1; k < n; ++k) sub[k - 1] = b[k];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
    for (int k = 0; k < n; ++k) x[k] = es.eigenvalues()[k];
  }

  // Newton polish on p_n, then Christoffel weights 1 / sum_k p_k(x)^2.
  const double log_mu0 = (al + be + 1.0) * std::log(2.0) + std::lgamma(al + 1.0) +
                         std::lgamma(be + 1.0) - std::lgamma(al + be + 2.0);
  const double mu0 = std::exp(log_mu0);
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) {
    double xi = x[i];
    for (int it = 0; it < 3; ++it) {
      double pm = 0.0, p = 1.0, dpm = 0.0, dp = 0.0;
      for (int k = 0; k < n; ++k) {
        const double pn = ((xi - a[k]) * p - b[k] * pm) / b[k + 1];
        const double dpn = (p + (xi - a[k]) * dp - b[k] * dpm) / b[k + 1];
        pm = p;
        p = pn;
        dpm = dp;
        dp = dpn;
      }
      const double step = p / dp;
      if (!std::isfinite(step)) break;
      const double cand = xi - step;
      if (cand <= -1.0 || cand >= 1.0) break;
      xi = cand;
      if (std::abs(step) < 1e-16) break;
    }
    x[i] = xi;
    double pm = 0.0, p = 1.0, sum = 1.0;
    for (int k = 0; k + 1 < n; ++k) {
      const double pn = ((xi - a[k]) * p - b[k] * pm) / b[k + 1];
      pm = p;
      p = pn;
      sum += p * p;
    }
    w[i] = mu0 / sum;
  }
  return std::make_shared<const QuadratureRule>(std::move(x), std::move(w), al, be);
}

}  // namespace

std::shared_ptr<const QuadratureRule> gauss_jacobi(int n, double alpha, double beta) {
  if (n < 1) throw DomainError("quadrature order must be positive");
  if (!(alpha > -1.0) || !(beta > -1.0))
    throw DivergentIntegral("Jacobi weight exponents must exceed -1 (alpha=" +
                            std::to_string(alpha) + ", beta=" + std::to_string(beta) + ")");
  static std::mutex mu;
  static std::map<std::tuple<int, double, double>, std::shared_ptr<const QuadratureRule>> cache;
  const auto key = std::make_tuple(n, alpha, beta);
  {
    std::lock_guard lock(mu);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
  }
  auto rule = build_gauss_jacobi(n, alpha, beta);
  std::lock_guard lock(mu);
  return cache.emplace(key, std::move(rule)).first->second;
}

std::shared_ptr<const QuadratureRule> zonal_rule(const ZonalProfile& g, Dimension d, int n) {
  const double m = d.measure_exponent();
  return gauss_jacobi(n, g.exp_plus + m, g.exp_minus + m);
}

double zonal_integral(const ZonalProfile& g, Dimension d, const QuadratureRule& rule) {
  const double m = d.measure_exponent();
  if (std::abs(rule.alpha_exp() - (g.exp_plus + m)) > 1e-14 ||
      std::abs(rule.beta_exp() - (g.exp_minus + m)) > 1e-14)
    throw DomainError("quadrature exponents do not match the integrand's declared singularities");
  return surface_area(d.value() - 1) * rule.apply(g.smooth);
}

double zonal_integral(const ZonalProfile& g, Dimension d, int start_order) {
  // Raises DivergentIntegral up front when the combined exponents are <= -1.
  auto rule = zonal_rule(g, d, start_order);
  double prev = zonal_integral(g, d, *rule);
  for (int n = 2 * start_order; n <= kMaxQuadratureOrder; n *= 2) {
    rule = zonal_rule(g, d, n);
    const double cur = zonal_integral(g, d, *rule);
    const double scale =
        surface_area(d.value() - 1) * rule->apply([&](double c) { return std::abs(g.smooth(c)); });
    if (std::abs(cur - prev) <= kQuadratureRelTol * std::max(std::abs(cur), scale)) return cur;
    prev = cur;
  }
  throw QuadratureNotConverged("zonal integral did not settle below order " +
                               std::to_string(kMaxQuadratureOrder));
}

TangentVector::TangentVector(Eigen::VectorXd base, Eigen::VectorXd dir)
    : base_(std::move(base)), dir_(std::move(dir)) {
  if (base_.size() != dir_.size() || base_.size() < 2)
    throw DomainError("tangent vector needs base and direction of equal dimension >= 2");
  if (std::abs(base_.norm() - 1.0) > kGeometryTol) throw DomainError("tangent base must be a unit vector");
  if (std::abs(base_.dot(dir_)) > kGeometryTol)
    throw NotTangent("direction is not orthogonal to its base point");
}

TangentVector tangent_map(const Eigen::VectorXd& sigma, const TangentVector& x) {
  const Eigen::VectorXd& sigma_p = x.base();
  if (sigma.size() != sigma_p.size()) throw DomainError("dimension mismatch in tangent_map");
  if (std::abs(sigma.norm() - 1.0) > kGeometryTol) throw DomainError("sigma must be a unit vector");
  Eigen::VectorXd out = sigma_p.dot(sigma) * x.dir() - sigma.dot(x.dir()) * sigma_p;
  // The image is tangent at sigma up to rounding; project the residue away so
  // the result satisfies the TangentVector invariant.
  out -= sigma.dot(out) * sigma;
  return TangentVector(sigma, std::move(out));
}

double contraction_deficit(const Eigen::VectorXd& sigma, const Eigen::VectorXd& sigma_prime,
                           const Eigen::VectorXd& e) {
  const TangentVector te(sigma, e);
  if (std::abs(e.norm() - 1.0) > kGeometryTol) throw DomainError("e must be a unit vector");
  const TangentVector image = tangent_map(sigma_prime, te);
  const double v = 1.0 - image.dir().squaredNorm();
  return std::clamp(v, 0.0, 1.0);
}

}  // namespace sphkern
