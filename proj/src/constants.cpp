#include "sphkern/constants.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <boost/math/interpolators/barycentric_rational.hpp>

#include "sphkern/errors.hpp"
#include "sphkern/gegenbauer.hpp"

namespace sphkern {

double lambda_delta(Dimension d) {
  const double dd = d.value();
  return dd + 3.0 - 1.0 / (dd - 1.0);
}

double ck_curvature(const KernelSpec& k) {
  const int d = k.dim().value();
  if (d < 3) throw DimensionTooSmall("the curvature constant needs d >= 3");
  return (d - 2.0) / (2.0 * (d - 1.0)) * levy_moment(k);
}

double cp_zonal(const KernelSpec& k) { return levy_moment(k) / (k.dim().value() - 1.0); }

double cp_spectral(const KernelSpectrum& spec) {
  const int L = spec.max_degree();
  if (L < 2) throw TailNotCertified("spectrum must reach degree 2");
  const double r2 = spec[2] / laplace_eigenvalue(spec.d, 2);
  double best = r2;
  int best_l = 2;
  for (int l = 2; l <= L; l += 2) {
    const double v = spec[l];
    if (!std::isfinite(v) || v < 0.0)
      throw TailNotCertified("even eigenvalue lambda~_" + std::to_string(l) + " is negative or not finite");
    const double r = v / laplace_eigenvalue(spec.d, l);
    if (r > best * (1.0 + 1e-12)) {
      best = r;
      best_l = l;
    }
  }
  if (best_l != 2)
    throw TailNotCertified("spectral ratio peaks at l=" + std::to_string(best_l) +
                           " instead of l=2; the truncated sup does not bound the tail");
  if (L >= 4) {
    const auto rep = legendre_inequality_check(spec.d, L / 2, 1001);
    if (rep.max_violation > 1e-12)
      throw TailNotCertified("even-degree comparison fails at l=" + std::to_string(2 * rep.worst_l));
  }
  return 2.0 * r2;
}

double ck_subordinated(const WeightSpec& w, Dimension d) {
  const double a = 2.0 * lambda_delta(d);
  return w.integrate([a](double t) { return -0.5 * std::expm1(-a * t); });
}

double cp_subordinated(const WeightSpec& w, Dimension d) {
  const double dd = d.value();
  return w.integrate([dd](double t) { return -std::expm1(-2.0 * dd * t) / dd; });
}

double subordination_bound(const WeightSpec& w, Dimension d) {
  if (w.is_zero()) throw DomainError("zero weight has no subordination bound");
  if (!w.finite_mass()) {
    // Both integrals grow like the mass of the truncation while their
    // difference stays bounded, so the ratio tends to d.
    return d.value();
  }
  return 2.0 * ck_subordinated(w, d) / cp_subordinated(w, d);
}

std::string describe(const AlphaSpec& a) {
  std::ostringstream os;
  os.precision(12);
  if (const auto* p = std::get_if<PowerAlpha>(&a)) {
    os << "power(gamma=" << p->gamma << ")";
  } else {
    os << "tabulated(n=" << std::get<TabulatedAlpha>(a).r.size() << ")";
  }
  return os.str();
}

namespace {

double tabulated_sup(const TabulatedAlpha& t, std::pair<double, double> r_range) {
  const std::size_t n = t.r.size();
  if (n < 2 || t.alpha.size() != n || t.dalpha.size() != n)
    throw DomainError("tabulated alpha needs >= 2 matching samples");
  for (std::size_t i = 0; i < n; ++i) {
    if (!(t.r[i] > 0.0) || !(t.alpha[i] > 0.0) || !std::isfinite(t.dalpha[i]))
      throw DomainError("tabulated alpha needs r > 0, alpha > 0 and finite alpha'");
    if (i > 0 && !(t.r[i] > t.r[i - 1])) throw DomainError("tabulated alpha radii must increase strictly");
  }
  const double lo = std::max(r_range.first, t.r.front());
  const double hi = std::min(r_range.second, t.r.back());
  if (!(lo > 0.0) || !(hi >= lo)) throw DomainError("r_range does not meet the tabulated radii");

  // The quantity r alpha'/alpha is scale-free and varies slowly in log r, so
  // it is interpolated directly rather than through alpha and alpha'.
  std::vector<double> u(n), e(n);
  for (std::size_t i = 0; i < n; ++i) {
    u[i] = std::log(t.r[i]);
    e[i] = t.r[i] * t.dalpha[i] / t.alpha[i];
  }
  const std::size_t order = std::min<std::size_t>(3, n - 1);
  const boost::math::barycentric_rational<double> elasticity(u.data(), e.data(), n, order);
  auto q = [&](double r) { return 0.5 * std::abs(elasticity(std::log(r))); };

  constexpr int kGrid = 2001;
  const double llo = std::log(lo), lhi = std::log(hi);
  std::vector<double> rs(kGrid), qs(kGrid);
  for (int j = 0; j < kGrid; ++j) {
    rs[j] = hi == lo ? lo : std::exp(llo + (lhi - llo) * j / (kGrid - 1));
    qs[j] = q(rs[j]);
  }
  for (std::size_t i = 0; i < n; ++i)
    if (t.r[i] >= lo && t.r[i] <= hi) {
      rs.push_back(t.r[i]);
      qs.push_back(t.r[i] * std::abs(t.dalpha[i]) / (2.0 * t.alpha[i]));
    }
  const auto jmax = static_cast<std::size_t>(std::max_element(qs.begin(), qs.begin() + kGrid) - qs.begin());
  double best = *std::max_element(qs.begin(), qs.end());
  // Golden-section refinement in log r around the best grid point.
  double x0 = std::log(rs[jmax == 0 ? 0 : jmax - 1]);
  double x1 = std::log(rs[std::min<std::size_t>(jmax + 1, kGrid - 1)]);
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double xa = x1 - g * (x1 - x0), xb = x0 + g * (x1 - x0);
  double fa = q(std::exp(xa)), fb = q(std::exp(xb));
  for (int it = 0; it < 60 && x1 - x0 > 1e-14; ++it) {
    if (fa > fb) {
      x1 = xb;
      xb = xa;
      fb = fa;
      xa = x1 - g * (x1 - x0);
      fa = q(std::exp(xa));
    } else {
      x0 = xa;
      xa = xb;
      fa = fb;
      xb = x0 + g * (x1 - x0);
      fb = q(std::exp(xb));
    }
  }
  return std::max({best, fa, fb});
}

}  // namespace

CriterionVerdict criterion_check(const AlphaSpec& alpha, double lambda_b, std::pair<double, double> r_range) {
  if (!(lambda_b >= 0.0)) throw DomainError("lambda_b must be >= 0");
  if (!(r_range.first > 0.0) || !(r_range.second >= r_range.first)) throw DomainError("invalid r_range");
  CriterionVerdict v;
  v.alpha_description = describe(alpha);
  if (const auto* p = std::get_if<PowerAlpha>(&alpha)) {
    if (!std::isfinite(p->gamma)) throw DomainError("gamma must be finite");
    v.sup_quantity = 0.5 * std::abs(p->gamma);
  } else {
    v.sup_quantity = tabulated_sup(std::get<TabulatedAlpha>(alpha), r_range);
  }
  v.threshold = std::sqrt(lambda_b);
  v.passes = v.sup_quantity <= v.threshold * (1.0 + kCriterionRelTol);
  return v;
}

ConstantsReport assemble_lambda(const KernelSpec& k, const AssembleOptions& opts) {
  const Dimension d = k.dim();
  const int dd = d.value();
  ConstantsReport rep;
  rep.d = dd;
  rep.kernel_id = k.id();
  rep.lambda_delta = lambda_delta(d);
  rep.levy_moment = levy_moment(k);
  if (!(rep.levy_moment > 0.0)) throw DomainError("kernel " + k.id() + " vanishes identically");
  rep.c_P_zonal = rep.levy_moment / (dd - 1.0);

  try {
    if (opts.spectrum) {
      if (!(opts.spectrum->d == d) || opts.spectrum->kernel_id != k.id())
        throw DomainError("supplied spectrum belongs to a different kernel");
      rep.c_P_spectral = cp_spectral(*opts.spectrum);
    } else {
      rep.c_P_spectral = cp_spectral(btilde_spectrum(k, opts.spectrum_L));
    }
  } catch (const TailNotCertified& e) {
    rep.notes.emplace_back(std::string("c_P_spectral omitted: ") + e.what());
  }

  if (dd >= 3) {
    rep.c_K_curvature = (dd - 2.0) / (2.0 * (dd - 1.0)) * rep.levy_moment;
    rep.lambda_b_routes["curvature"] = 2.0 * *rep.c_K_curvature / rep.c_P_zonal;
    rep.route_provenance["curvature"] = "Lambda_b = 2 C_K / C_P with C_K, C_P from the Levy moment";
  }

  if (const WeightSpec* w = k.weight()) {
    rep.c_K_subordinated = ck_subordinated(*w, d);
    rep.c_P_subordinated = cp_subordinated(*w, d);
    rep.lambda_b_routes["subordination"] = 2.0 * *rep.c_K_subordinated / *rep.c_P_subordinated;
    rep.route_provenance["subordination"] =
        "Lambda_b = d int omega (1 - e^{-2 Lambda_Delta t}) / int omega (1 - e^{-2 d t})";
  }

  if (k.is_constant() && dd >= 3) {
    rep.lambda_b_routes["constant_limit"] = dd;
    rep.route_provenance["constant_limit"] =
        "constant kernel as the limit of subordinated kernels with flat weights on [t0, T], T -> inf";
  }

  if (opts.reference) {
    const KernelSpec& ref = *opts.reference;
    double ref_lambda = 0.0;
    std::string how;
    if (opts.reference_lambda) {
      if (!(*opts.reference_lambda >= 0.0)) throw DomainError("reference lambda must be >= 0");
      ref_lambda = *opts.reference_lambda;
      how = "supplied";
    } else {
      AssembleOptions sub;
      sub.spectrum_L = opts.spectrum_L;
      ref_lambda = assemble_lambda(ref, sub).lambda_b;
      how = "derived";
    }
    const KernelComparison cmp = compare_kernels(k, ref, opts.compare_grid);
    rep.comparison = cmp;
    rep.lambda_b_routes["comparison"] = cmp.c0 / cmp.C0 * ref_lambda;
    std::ostringstream os;
    os.precision(12);
    os << "Lambda_b >= (c0/C0) Lambda_ref against " << ref.id() << " with Lambda_ref = " << ref_lambda << " ("
       << how << ")";
    rep.route_provenance["comparison"] = os.str();
  }

  if (rep.lambda_b_routes.empty())
    throw NoRouteApplicable("no lower-bound route applies to " + k.id() +
                            " (d = 2 needs a subordination weight or a reference kernel)");
  for (const auto& [name, v] : rep.lambda_b_routes) rep.lambda_b = std::max(rep.lambda_b, v);

  if (opts.alpha) rep.criterion = criterion_check(*opts.alpha, rep.lambda_b, opts.r_range);
  return rep;
}

}  // namespace sphkern
