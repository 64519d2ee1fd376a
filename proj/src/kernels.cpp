#include "sphkern/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <boost/math/interpolators/barycentric_rational.hpp>

#include "sphkern/errors.hpp"
#include "sphkern/gegenbauer.hpp"

namespace sphkern {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

// ---------------------------------------------------------------------------
// WeightSpec
// ---------------------------------------------------------------------------

WeightSpec::WeightSpec(Variant v) : v_(std::move(v)) {
  std::visit(Overloaded{
                 [](const ConstantOnInterval& w) {
                   if (!(w.height >= 0.0) || !std::isfinite(w.height))
                     throw DomainError("constant weight height must be finite and >= 0");
                   if (!(w.t_min > 0.0) || !(w.t_max > w.t_min))
                     throw DomainError("constant weight needs 0 < t_min < t_max");
                 },
                 [](const ExponentialWeight& w) {
                   if (!(w.rate > 0.0) || !std::isfinite(w.rate)) throw DomainError("exponential weight needs rate > 0");
                   if (!(w.scale >= 0.0) || !std::isfinite(w.scale))
                     throw DomainError("exponential weight needs scale >= 0");
                 },
                 [](const TabulatedWeight& w) {
                   if (w.t.size() != w.omega.size() || w.t.size() < 2)
                     throw DomainError("tabulated weight needs >= 2 matching samples");
                   if (!(w.t.front() >= 0.0)) throw DomainError("tabulated weight times must be >= 0");
                   for (std::size_t i = 0; i < w.t.size(); ++i) {
                     if (!std::isfinite(w.t[i]) || !(w.omega[i] >= 0.0) || !std::isfinite(w.omega[i]))
                       throw DomainError("tabulated weight samples must be finite, omega >= 0");
                     if (i > 0 && !(w.t[i] > w.t[i - 1]))
                       throw DomainError("tabulated weight times must increase strictly");
                   }
                 },
             },
             v_);
}

std::string WeightSpec::name() const {
  return std::visit(Overloaded{
                        [](const ConstantOnInterval&) { return std::string("constant_on_interval"); },
                        [](const ExponentialWeight&) { return std::string("exponential"); },
                        [](const TabulatedWeight&) { return std::string("tabulated"); },
                    },
                    v_);
}

double WeightSpec::operator()(double t) const {
  if (!(t > 0.0)) return 0.0;
  return std::visit(Overloaded{
                        [t](const ConstantOnInterval& w) {
                          return (t >= w.t_min && t <= w.t_max) ? w.height : 0.0;
                        },
                        [t](const ExponentialWeight& w) { return w.scale * std::exp(-w.rate * t); },
                        [t](const TabulatedWeight& w) {
                          if (t < w.t.front() || t > w.t.back()) return 0.0;
                          const auto it = std::upper_bound(w.t.begin(), w.t.end(), t);
                          if (it == w.t.end()) return w.omega.back();
                          const std::size_t i = static_cast<std::size_t>(it - w.t.begin());
                          const double s = (t - w.t[i - 1]) / (w.t[i] - w.t[i - 1]);
                          return (1.0 - s) * w.omega[i - 1] + s * w.omega[i];
                        },
                    },
                    v_);
}

bool WeightSpec::finite_mass() const {
  if (const auto* w = std::get_if<ConstantOnInterval>(&v_)) return std::isfinite(w->t_max) || w->height == 0.0;
  return true;
}

double WeightSpec::support_min() const {
  return std::visit(Overloaded{
                        [](const ConstantOnInterval& w) { return w.t_min; },
                        [](const ExponentialWeight&) { return 0.0; },
                        [](const TabulatedWeight& w) {
                          // A table starting with zero weight only charges t beyond its first
                          // non-zero neighbour.
                          std::size_t i = 0;
                          while (i + 1 < w.omega.size() && w.omega[i] == 0.0 && w.omega[i + 1] == 0.0) ++i;
                          return w.t[i];
                        },
                    },
                    v_);
}

double WeightSpec::support_max() const {
  return std::visit(Overloaded{
                        [](const ConstantOnInterval& w) { return w.t_max; },
                        [](const ExponentialWeight&) { return std::numeric_limits<double>::infinity(); },
                        [](const TabulatedWeight& w) { return w.t.back(); },
                    },
                    v_);
}

bool WeightSpec::is_zero() const {
  return std::visit(Overloaded{
                        [](const ConstantOnInterval& w) { return w.height == 0.0; },
                        [](const ExponentialWeight& w) { return w.scale == 0.0; },
                        [](const TabulatedWeight& w) {
                          return std::all_of(w.omega.begin(), w.omega.end(), [](double x) { return x == 0.0; });
                        },
                    },
                    v_);
}

namespace {

constexpr double kTimeFloor = 1e-30;
constexpr double kTailMass = 1e-14;
constexpr int kPanelNodes = 20;
constexpr int kMaxPanelLevels = 12;
constexpr double kWeightRelTol = 1e-13;

}  // namespace

std::vector<double> WeightSpec::breakpoints(double t_lower) const {
  double lo = std::max({t_lower, support_min(), 0.0});
  double hi = support_max();
  if (const auto* e = std::get_if<ExponentialWeight>(&v_)) {
    hi = std::log(1.0 / kTailMass) / e->rate;
  }
  std::vector<double> pts{lo, hi};
  if (lo < 1.0 && hi > 1.0) pts.push_back(1.0);
  if (const auto* w = std::get_if<TabulatedWeight>(&v_)) {
    for (double t : w->t)
      if (t > lo && t < hi) pts.push_back(t);
  }
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return pts;
}

double WeightSpec::integrate(const std::function<double(double)>& g, double t_lower) const {
  if (!finite_mass()) throw DivergentIntegral("weight has infinite mass on (0, inf)");
  if (is_zero()) return 0.0;
  const auto pts = breakpoints(t_lower);
  if (pts.size() < 2 || !(pts.back() > pts.front())) return 0.0;
  const auto gl = gauss_legendre(kPanelNodes);

  // One pass of composite Gauss-Legendre with panel width `width` (in log t on
  // (0,1], in t beyond). Returns {integral, integral of |.|}.
  auto pass = [&](double width) {
    double acc = 0.0, acc_abs = 0.0;
    for (std::size_t p = 0; p + 1 < pts.size(); ++p) {
      const double a = pts[p], b = pts[p + 1];
      const bool log_space = b <= 1.0;
      const double xa = log_space ? std::log(std::max(a, kTimeFloor)) : a;
      const double xb = log_space ? std::log(b) : b;
      const int panels = std::max(1, static_cast<int>(std::ceil((xb - xa) / width)));
      const double h = (xb - xa) / panels;
      for (int j = 0; j < panels; ++j) {
        const double mid = xa + (j + 0.5) * h;
        for (int i = 0; i < kPanelNodes; ++i) {
          const double x = mid + 0.5 * h * gl->nodes()[i];
          const double t = log_space ? std::exp(x) : x;
          const double jac = log_space ? t : 1.0;
          const double v = (*this)(t) * g(t) * jac * 0.5 * h * gl->weights()[i];
          acc += v;
          acc_abs += std::abs(v);
        }
      }
    }
    return std::pair{acc, acc_abs};
  };

  double width = 1.0;
  if (const auto* e = std::get_if<ExponentialWeight>(&v_)) width = std::min(1.0, 2.0 / e->rate);
  auto prev = pass(width);
  for (int level = 1; level <= kMaxPanelLevels; ++level) {
    width *= 0.5;
    const auto cur = pass(width);
    if (std::abs(cur.first - prev.first) <= kWeightRelTol * std::max(std::abs(cur.first), cur.second))
      return cur.first;
    prev = cur;
  }
  throw QuadratureNotConverged("weight integral did not converge");
}

// ---------------------------------------------------------------------------
// KernelSpec
// ---------------------------------------------------------------------------

KernelSpec::KernelSpec(Dimension d, Variant v) : d_(d), v_(std::move(v)) {
  std::visit(Overloaded{
                 [](const HardSphere&) {},
                 [](const PowerLaw& p) {
                   if (!(p.s > 0.0) || !std::isfinite(p.s)) throw DomainError("power law needs s > 0");
                   if (!std::isfinite(p.gamma)) throw DomainError("power law gamma must be finite");
                 },
                 [](const ConstantKernel& c) {
                   if (!(c.value > 0.0) || !std::isfinite(c.value))
                     throw DomainError("constant kernel value must be positive and finite");
                 },
                 [](const SubordinatedKernel&) {},
                 [this](const TabulatedKernel& t) {
                   if (t.c.size() != t.values.size() || t.c.size() < 4)
                     throw DomainError("tabulated kernel needs >= 4 matching samples");
                   if (t.c.front() != -1.0 || t.c.back() != 1.0)
                     throw DomainError("tabulated kernel samples must span [-1, 1]");
                   for (std::size_t i = 0; i < t.c.size(); ++i) {
                     if (!(t.values[i] >= 0.0) || !std::isfinite(t.values[i]))
                       throw DomainError("tabulated kernel values must be finite and >= 0");
                     if (i > 0 && !(t.c[i] > t.c[i - 1]))
                       throw DomainError("tabulated kernel abscissae must increase strictly");
                   }
                   if (!std::isfinite(t.exp_plus) || !std::isfinite(t.exp_minus))
                     throw DomainError("tabulated kernel exponents must be finite");
                   auto interp = std::make_shared<boost::math::barycentric_rational<double>>(
                       t.c.begin(), t.c.end(), t.values.begin(), std::min<std::size_t>(3, t.c.size() - 1));
                   interp_ = [interp](double c) { return std::max(0.0, (*interp)(c)); };
                 },
             },
             v_);
}

std::string KernelSpec::name() const {
  return std::visit(Overloaded{
                        [](const HardSphere&) { return std::string("hard_sphere"); },
                        [](const PowerLaw&) { return std::string("power_law"); },
                        [](const ConstantKernel&) { return std::string("constant"); },
                        [](const SubordinatedKernel&) { return std::string("subordinated"); },
                        [](const TabulatedKernel&) { return std::string("tabulated"); },
                    },
                    v_);
}

std::string KernelSpec::id() const {
  std::ostringstream os;
  os.precision(12);
  os << name();
  std::visit(Overloaded{
                 [](const HardSphere&) {},
                 [&os](const PowerLaw& p) { os << "(s=" << p.s << ",gamma=" << p.gamma << ")"; },
                 [&os](const ConstantKernel& c) { os << "(" << c.value << ")"; },
                 [&os](const SubordinatedKernel& s) { os << "(" << s.weight.name() << ")"; },
                 [&os](const TabulatedKernel& t) { os << "(n=" << t.c.size() << ")"; },
             },
             v_);
  os << "/d=" << d_.value();
  return os.str();
}

EndpointExponents KernelSpec::exponents() const {
  const int d = d_.value();
  return std::visit(Overloaded{
                        [d](const HardSphere&) { return EndpointExponents{0.5 * (3 - d), 0.0}; },
                        [d](const PowerLaw& p) {
                          const double e = -0.5 * (d - 1 + 2.0 * p.s);
                          return EndpointExponents{e, e};
                        },
                        [](const ConstantKernel&) { return EndpointExponents{}; },
                        [d](const SubordinatedKernel& s) {
                          // Weights charging t -> 0 produce the small-time heat-kernel
                          // singularity |theta|^{3-d} at c = 1 (logarithmic at d = 3).
                          if (s.weight.support_min() > 0.0 || d <= 3) return EndpointExponents{};
                          return EndpointExponents{0.5 * (3 - d), 0.0};
                        },
                        [](const TabulatedKernel& t) { return EndpointExponents{t.exp_plus, t.exp_minus}; },
                    },
                    v_);
}

double KernelSpec::smooth_part(double c) const {
  if (!(std::abs(c) <= 1.0)) throw DomainError("kernel argument outside [-1,1]");
  const int d = d_.value();
  return std::visit(Overloaded{
                        [d](const HardSphere&) { return std::ldexp(1.0, d - 3); },
                        [](const PowerLaw&) { return 1.0; },
                        [](const ConstantKernel& k) { return k.value; },
                        [this, c](const SubordinatedKernel& s) {
                          const double p = exponents().plus;
                          const double b = subordinated_profile(s.weight, d_, c);
                          return p == 0.0 ? b : b * std::pow(1.0 - c, -p);
                        },
                        [this, c](const TabulatedKernel&) { return interp_(c); },
                    },
                    v_);
}

double KernelSpec::operator()(double c) const {
  if (!(std::abs(c) <= 1.0)) throw DomainError("kernel argument outside [-1,1]");
  if (const auto* s = std::get_if<SubordinatedKernel>(&v_)) return subordinated_profile(s->weight, d_, c);
  const auto ex = exponents();
  const double f = smooth_part(c);
  if (f == 0.0) return 0.0;
  double v = f;
  if (ex.plus != 0.0) v *= std::pow(1.0 - c, ex.plus);
  if (ex.minus != 0.0) v *= std::pow(1.0 + c, ex.minus);
  return v;
}

bool KernelSpec::is_constant() const {
  if (std::holds_alternative<ConstantKernel>(v_)) return true;
  return std::holds_alternative<HardSphere>(v_) && d_.value() == 3;
}

const WeightSpec* KernelSpec::weight() const {
  if (const auto* s = std::get_if<SubordinatedKernel>(&v_)) return &s->weight;
  return nullptr;
}

bool KernelSpec::is_smooth() const {
  return std::visit(Overloaded{
                        [this](const HardSphere&) { return d_.value() == 3; },
                        [](const PowerLaw&) { return false; },
                        [](const ConstantKernel&) { return true; },
                        [](const SubordinatedKernel& s) { return s.weight.support_min() > 0.0; },
                        [](const TabulatedKernel& t) { return t.exp_plus == 0.0 && t.exp_minus == 0.0; },
                    },
                    v_);
}

double kernel_eval(const KernelSpec& k, double c) { return k(c); }

PowerLawParams power_law_params(double q, Dimension d) {
  const int dd = d.value();
  if (!(q > dd - 1) || !(q >= 0.5 * (dd + 1)))
    throw OutOfRange("power law exponent q must satisfy q > d-1 and q >= (d+1)/2");
  const double s = (dd - 1) / (2.0 * (q - 1.0));
  return PowerLawParams{1.0 - 4.0 * s, s};
}

double levy_moment(const KernelSpec& k) {
  const Dimension d = k.dim();
  if (const WeightSpec* w = k.weight()) {
    // (1 - c^2) = (d-1)/d (1 - P_2(c)) and \int (1-P_2) u_t = 1 - e^{-2d t}.
    const double dd = d.value();
    return (dd - 1.0) / dd * w->integrate([dd](double t) { return -std::expm1(-2.0 * dd * t); });
  }
  const auto ex = k.exponents();
  const ZonalProfile g{[&k](double c) { return k.smooth_part(c); }, ex.plus + 1.0, ex.minus + 1.0};
  return zonal_integral(g, d);
}

double symmetrized(const KernelSpec& k, double c) {
  if (!(std::abs(c) <= 1.0)) throw DomainError("kernel argument outside [-1,1]");
  return k(c) + k(-c);
}

namespace {

// Ratio of symmetrized kernels at the endpoint c = 1, by limit when needed.
double endpoint_ratio(const KernelSpec& k, const KernelSpec& k0) {
  const double v = symmetrized(k, 1.0), v0 = symmetrized(k0, 1.0);
  if (std::isfinite(v) && std::isfinite(v0) && v0 > 0.0) return v / v0;
  double prev = std::numeric_limits<double>::quiet_NaN();
  double cur = prev;
  for (int j = 4; j <= 12; j += 2) {
    const double c = 1.0 - std::pow(10.0, -j);
    prev = cur;
    cur = symmetrized(k, c) / symmetrized(k0, c);
  }
  if (!std::isfinite(cur) || !(cur > 0.0) || !(std::abs(cur - prev) <= 1e-6 * std::abs(cur)))
    throw UnboundedRatio("symmetrized kernel ratio has no finite positive limit at c = +-1");
  return cur;
}

template <class F>
double golden_extremum(F&& f, double a, double b, bool maximize) {
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  auto val = [&](double x) { return maximize ? -f(x) : f(x); };
  double x1 = b - g * (b - a), x2 = a + g * (b - a);
  double f1 = val(x1), f2 = val(x2);
  for (int it = 0; it < 80 && (b - a) > 1e-15; ++it) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - g * (b - a);
      f1 = val(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + g * (b - a);
      f2 = val(x2);
    }
  }
  return f(0.5 * (a + b));
}

KernelComparison compare_on_grid(const KernelSpec& k, const KernelSpec& k0, int n, double end_ratio) {
  auto ratio = [&](double c) { return symmetrized(k, c) / symmetrized(k0, c); };
  // The ratio is even in c, so the half grid c >= 0 suffices.
  std::vector<double> cs, rs;
  for (int j = 0; j < n; ++j) {
    const double c = std::cos((j + 0.5) * std::numbers::pi / n);
    if (c < 0.0) break;
    const double r = ratio(c);
    if (!std::isfinite(r) || !(r > 0.0)) throw UnboundedRatio("symmetrized ratio not finite and positive");
    cs.push_back(c);
    rs.push_back(r);
  }
  cs.insert(cs.begin(), 1.0);
  rs.insert(rs.begin(), end_ratio);
  if (cs.back() != 0.0) {
    cs.push_back(0.0);
    rs.push_back(ratio(0.0));
  }
  const auto imin = static_cast<std::size_t>(std::min_element(rs.begin(), rs.end()) - rs.begin());
  const auto imax = static_cast<std::size_t>(std::max_element(rs.begin(), rs.end()) - rs.begin());
  double lo = rs[imin], hi = rs[imax];
  auto refine = [&](std::size_t i, bool maximize) {
    if (i == 0) return rs[i];
    const double a = cs[std::min(i + 1, cs.size() - 1)];
    const double b = i >= 2 ? cs[i - 1] : std::max(cs[i], 1.0 - 1e-12);
    const double v = golden_extremum(ratio, a, b, maximize);
    return maximize ? std::max(rs[i], v) : std::min(rs[i], v);
  };
  lo = std::min(lo, refine(imin, false));
  hi = std::max(hi, refine(imax, true));
  return KernelComparison{lo, hi};
}

}  // namespace

KernelComparison compare_kernels(const KernelSpec& k, const KernelSpec& k0, int grid) {
  if (!(k.dim() == k0.dim())) throw DomainError("compared kernels must share the dimension");
  if (grid < 3) throw DomainError("comparison grid needs >= 3 points");
  const double end = endpoint_ratio(k, k0);
  KernelComparison prev = compare_on_grid(k, k0, grid, end);
  int n = grid;
  for (int it = 0; it < 4; ++it) {
    n = 2 * n - 1;
    const KernelComparison cur = compare_on_grid(k, k0, n, end);
    const bool settled = std::abs(cur.c0 - prev.c0) < 1e-8 * std::abs(cur.c0) &&
                         std::abs(cur.C0 - prev.C0) < 1e-8 * std::abs(cur.C0);
    prev = cur;
    if (settled) break;
  }
  return prev;
}

// ---------------------------------------------------------------------------
// Spectra
// ---------------------------------------------------------------------------

namespace {

std::vector<double> zonal_spectrum_pass(const KernelSpec& k, int L, int n, double alpha, double beta_even,
                                        double beta_odd, bool odd_finite) {
  const Dimension d = k.dim();
  const PolyFamily fam(d, L);
  const double area = surface_area(d.value() - 1);
  std::vector<double> vals(L + 1, 0.0), q(L + 1);

  const auto even_rule = gauss_jacobi(n, alpha, beta_even);
  for (int i = 0; i < even_rule->order(); ++i) {
    const double x = even_rule->nodes()[i];
    const double ax = std::abs(x);
    const double s = area * even_rule->weights()[i] * k.smooth_part(x);
    fam.one_minus_ratio_all(ax, q);
    for (int l = 2; l <= L; l += 2) vals[l] += s * q[l] / (1.0 + ax);
  }
  if (odd_finite) {
    const auto odd_rule = gauss_jacobi(n, alpha, beta_odd);
    for (int i = 0; i < odd_rule->order(); ++i) {
      const double x = odd_rule->nodes()[i];
      const double s = area * odd_rule->weights()[i] * k.smooth_part(x);
      fam.one_minus_ratio_all(x, q);
      for (int l = 1; l <= L; l += 2) vals[l] += s * q[l];
    }
  } else {
    for (int l = 1; l <= L; l += 2) vals[l] = std::numeric_limits<double>::infinity();
  }
  vals[0] = 0.0;
  return vals;
}

}  // namespace

KernelSpectrum btilde_spectrum(const KernelSpec& k, int L, int start_order) {
  if (L < 2) throw DomainError("spectrum needs L >= 2");
  const Dimension d = k.dim();
  KernelSpectrum out;
  out.d = d;
  out.kernel_id = k.id();

  if (const WeightSpec* w = k.weight()) {
    out.values.assign(L + 1, 0.0);
    for (int l = 1; l <= L; ++l) {
      const double lam = laplace_eigenvalue(d, l);
      out.values[l] = w->integrate([lam](double t) { return -std::expm1(-lam * t); });
    }
    return out;
  }

  const auto ex = k.exponents();
  const double m = d.measure_exponent();
  const double alpha = ex.plus + 1.0 + m;
  const double beta_even = ex.minus + 1.0 + m;
  const double beta_odd = ex.minus + m;
  if (!(alpha > -1.0) || !(beta_even > -1.0))
    throw DivergentIntegral("kernel " + k.id() + " violates the Levy integrability condition");
  const bool odd_finite = beta_odd > -1.0;
  out.alpha_exp = alpha;
  out.beta_exp = beta_even;

  int n = std::max(start_order, 8);
  auto prev = zonal_spectrum_pass(k, L, n, alpha, beta_even, beta_odd, odd_finite);
  for (n *= 2; n <= kMaxQuadratureOrder; n *= 2) {
    auto cur = zonal_spectrum_pass(k, L, n, alpha, beta_even, beta_odd, odd_finite);
    bool ok = true;
    for (int l = 1; l <= L && ok; ++l) {
      if (!std::isfinite(cur[l])) continue;
      ok = std::abs(cur[l] - prev[l]) <= kQuadratureRelTol * std::max(std::abs(cur[l]), 1e-300);
    }
    if (ok) {
      out.values = std::move(cur);
      out.quadrature_order = n;
      return out;
    }
    prev = std::move(cur);
  }
  throw QuadratureNotConverged("spectrum of " + k.id() + " did not converge");
}

double subordinated_profile(const WeightSpec& w, Dimension d, double c) {
  if (!(std::abs(c) <= 1.0)) throw DomainError("kernel argument outside [-1,1]");
  if (w.is_zero()) return 0.0;
  double t_lower = w.support_min();
  if (t_lower == 0.0) {
    if (c == 1.0 && d.value() >= 3) return std::numeric_limits<double>::infinity();
    // Below theta^2/160 the heat kernel at angle theta is below e^{-40} of its
    // peak contribution.
    const double theta = std::acos(c);
    t_lower = std::max(theta * theta / 160.0, 1e-7);
  }
  return w.integrate([d, c](double t) { return heat_kernel_profile(d, t, c); }, t_lower);
}

}  // namespace sphkern
