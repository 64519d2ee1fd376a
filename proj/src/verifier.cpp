#include "sphkern/verifier.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <limits>
#include <mutex>
#include <numbers>
#include <thread>

#include <unsupported/Eigen/FFT>

#include "sphkern/errors.hpp"
#include "sphkern/gegenbauer.hpp"

namespace sphkern {

using cplx = std::complex<double>;
using std::numbers::pi;

namespace {

// ---------------------------------------------------------------------------
// Circle helpers (d = 2)
// ---------------------------------------------------------------------------

std::vector<cplx> fft_forward(std::span<const double> v) {
  Eigen::FFT<double> fft;
  std::vector<double> in(v.begin(), v.end());
  std::vector<cplx> out;
  fft.fwd(out, in);
  return out;
}

std::vector<double> fft_inverse(const std::vector<cplx>& X) {
  Eigen::FFT<double> fft;
  std::vector<double> out;
  fft.inv(out, X);
  return out;
}

int wavenumber(int k, int N) { return k <= N / 2 ? k : k - N; }

// Applies a_k -> m(|k|) a_k to the Fourier modes of grid values.
template <class M>
std::vector<double> circle_multiply(std::span<const double> v, M&& m) {
  auto X = fft_forward(v);
  const int N = static_cast<int>(X.size());
  for (int k = 0; k < N; ++k) X[k] *= m(std::abs(wavenumber(k, N)));
  return fft_inverse(X);
}

std::vector<double> circle_derivative(std::span<const double> v) {
  auto X = fft_forward(v);
  const int N = static_cast<int>(X.size());
  for (int k = 0; k < N; ++k) {
    const int w = wavenumber(k, N);
    X[k] *= (2 * w == N) ? cplx(0.0) : cplx(0.0, static_cast<double>(w));
  }
  return fft_inverse(X);
}

double circle_integral(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s * 2.0 * pi / static_cast<double>(v.size());
}

// ---------------------------------------------------------------------------
// Zonal helpers (d >= 3)
// ---------------------------------------------------------------------------

// Gauss rule for the zonal measure with weights that already include |S^{d-2}|.
struct ZonalGrid {
  std::vector<double> x;
  std::vector<double> w;
};

ZonalGrid zonal_grid(Dimension d, int n) {
  const double m = d.measure_exponent();
  const auto rule = gauss_jacobi(n, m, m);
  const double area = surface_area(d.value() - 1);
  ZonalGrid g;
  g.x.assign(rule->nodes().begin(), rule->nodes().end());
  g.w.resize(g.x.size());
  for (std::size_t i = 0; i < g.x.size(); ++i) g.w[i] = area * rule->weights()[i];
  return g;
}

// \int P_l^2 dsigma = |S^{d-1}| / N(d,l).
double zonal_norm(Dimension d, int l) { return surface_area(d.value()) / eigenspace_dim_real(d, l); }

struct ValueAndSlope {
  double v;
  double dv;
};

ValueAndSlope series_with_slope(const PolyFamily& fam, std::span<const double> a, double c, std::vector<double>& p,
                                std::vector<double>& dp) {
  const std::size_t n = a.size();
  p.resize(n);
  dp.resize(n);
  fam.eval_all(c, std::span(p.data(), n), std::span(dp.data(), n));
  double v = 0.0, dv = 0.0;
  for (std::size_t l = 0; l < n; ++l) {
    v += a[l] * p[l];
    dv += a[l] * dp[l];
  }
  return {v, dv};
}

// F and F' at c, through exp(log F) when the logarithm is stored.
struct ZonalEvaluator {
  const SphereFunction& F;
  PolyFamily fam;
  std::vector<double> p, dp;

  explicit ZonalEvaluator(const SphereFunction& f)
      : F(f),
        fam(f.dim(), std::max<int>(f.band_limit(),
                                   f.log_data() ? static_cast<int>(f.log_data()->size()) - 1 : 0)) {}

  ValueAndSlope operator()(double c) {
    if (F.log_data()) {
      const auto g = series_with_slope(fam, *F.log_data(), c, p, dp);
      const double v = std::exp(g.v);
      return {v, g.dv * v};
    }
    return series_with_slope(fam, F.data(), c, p, dp);
  }

  double value(double c) {
    if (F.log_data()) return std::exp(fam.series(*F.log_data(), c));
    return fam.series(F.data(), c);
  }
};

std::vector<double> project_values(Dimension d, const ZonalGrid& g, const std::vector<double>& vals, int L) {
  const PolyFamily fam(d, L);
  std::vector<double> a(L + 1, 0.0), p(L + 1);
  for (std::size_t i = 0; i < g.x.size(); ++i) {
    fam.eval_all(g.x[i], p);
    for (int l = 0; l <= L; ++l) a[l] += g.w[i] * vals[i] * p[l];
  }
  for (int l = 0; l <= L; ++l) a[l] /= zonal_norm(d, l);
  return a;
}

int log_degree(const SphereFunction& F) {
  return F.log_data() ? static_cast<int>(F.log_data()->size()) - 1 : F.band_limit();
}

// Node count used for integrals of non-polynomial functionals of F.
int functional_nodes(const SphereFunction& F) {
  const int lf = F.band_limit();
  return F.log_data() ? lf + 2 * log_degree(F) + 32 : 2 * lf + 32;
}

void require_same_kind(const SphereFunction& a, const SphereFunction& b) {
  if (!(a.dim() == b.dim()) || a.is_circle() != b.is_circle() || (a.is_circle() && a.grid_size() != b.grid_size()))
    throw DomainError("sphere functions have different representations");
}

double spectrum_at(const KernelSpectrum& spec, int l, bool even) {
  if (l > spec.max_degree())
    throw BandLimitExceeded("function has degree " + std::to_string(l) + " beyond the spectrum degree " +
                            std::to_string(spec.max_degree()));
  const double v = spec[l];
  if (!std::isfinite(v)) {
    if (even && l % 2 == 1) return 0.0;
    throw DomainError("B is not defined on degree " + std::to_string(l) + " for this kernel");
  }
  return v;
}

// Logarithm of F in F's representation: exact when stored, projected otherwise.
std::vector<double> log_representation(const SphereFunction& F) {
  if (F.log_data()) return *F.log_data();
  if (F.is_circle()) {
    std::vector<double> g(F.data().begin(), F.data().end());
    for (double& x : g) {
      if (!(x > 0.0)) throw NonPositive("log of a non-positive function");
      x = std::log(x);
    }
    return g;
  }
  const int L = F.band_limit();
  const auto grid = zonal_grid(F.dim(), 2 * L + 32);
  const PolyFamily fam(F.dim(), L);
  std::vector<double> vals(grid.x.size());
  for (std::size_t i = 0; i < vals.size(); ++i) {
    const double v = fam.series(F.data(), grid.x[i]);
    if (!(v > 0.0)) throw NonPositive("log of a non-positive function");
    vals[i] = std::log(v);
  }
  auto g = project_values(F.dim(), grid, vals, L);
  if (F.even())
    for (int l = 1; l <= L; l += 2) g[l] = 0.0;
  return g;
}

}  // namespace

// ---------------------------------------------------------------------------
// SphereFunction
// ---------------------------------------------------------------------------

SphereFunction::SphereFunction(Dimension d, bool circle, std::vector<double> data,
                               std::optional<std::vector<double>> log)
    : d_(d), circle_(circle), data_(std::move(data)), log_(std::move(log)) {
  for (double v : data_)
    if (!std::isfinite(v)) throw DomainError("sphere function data must be finite");
  update_even();
}

void SphereFunction::update_even() {
  double scale = 0.0;
  for (double v : data_) scale = std::max(scale, std::abs(v));
  const double tol = 1e-12 * std::max(scale, 1e-300);
  even_ = true;
  if (circle_) {
    const std::size_t h = data_.size() / 2;
    for (std::size_t j = 0; j < h && even_; ++j) even_ = std::abs(data_[j] - data_[j + h]) <= tol;
  } else {
    for (std::size_t l = 1; l < data_.size() && even_; l += 2) even_ = std::abs(data_[l]) <= tol;
  }
}

SphereFunction SphereFunction::circle(std::vector<double> values) {
  if (values.size() < 4 || values.size() % 2 != 0)
    throw DomainError("circle grids need an even number N >= 4 of points");
  return SphereFunction(Dimension(2), true, std::move(values), std::nullopt);
}

SphereFunction SphereFunction::zonal(Dimension d, std::vector<double> coeffs) {
  if (d.value() < 3) throw DomainError("zonal spectral functions are used for d >= 3; use a circle grid for d = 2");
  if (coeffs.empty()) throw DomainError("zonal function needs at least one coefficient");
  return SphereFunction(d, false, std::move(coeffs), std::nullopt);
}

SphereFunction SphereFunction::exp_of(const SphereFunction& g) {
  if (g.is_circle()) {
    std::vector<double> v(g.data_.begin(), g.data_.end());
    for (double& x : v) x = std::exp(x);
    return SphereFunction(g.d_, true, std::move(v), std::vector<double>(g.data_.begin(), g.data_.end()));
  }
  const Dimension d = g.d_;
  const int lg = g.band_limit();
  const PolyFamily gf(d, lg);
  for (int L = 4 * lg + 16; L <= 4096; L *= 2) {
    const auto grid = zonal_grid(d, L + lg + 16);
    std::vector<double> vals(grid.x.size());
    for (std::size_t i = 0; i < vals.size(); ++i) vals[i] = std::exp(gf.series(g.data_, grid.x[i]));
    auto a = project_values(d, grid, vals, L);
    double total = 0.0;
    for (double v : a) total += std::abs(v);
    // Rounding noise in a_l grows like sqrt(N(d,l)) because the divisor
    // |S^{d-1}|/N(d,l) shrinks.
    auto floor_at = [&](int l) {
      return 64.0 * std::numeric_limits<double>::epsilon() * total * std::sqrt(eigenspace_dim_real(d, l));
    };
    int last = L;
    while (last > 0 && std::abs(a[last]) <= floor_at(last)) --last;
    if (last <= L - 8) {
      a.resize(last + 1);
      if (g.even())
        for (std::size_t l = 1; l < a.size(); l += 2) a[l] = 0.0;
      return SphereFunction(d, false, std::move(a), std::vector<double>(g.data_.begin(), g.data_.end()));
    }
  }
  throw BandLimitExceeded("exp(G) is not resolved below degree 4096");
}

int SphereFunction::band_limit() const noexcept {
  return circle_ ? static_cast<int>(data_.size()) / 2 : static_cast<int>(data_.size()) - 1;
}

double SphereFunction::at_cosine(double c) const {
  if (circle_) return at_angle(std::acos(std::clamp(c, -1.0, 1.0)));
  const int L = std::max(band_limit(), log_ ? static_cast<int>(log_->size()) - 1 : 0);
  const PolyFamily fam(d_, L);
  if (log_) return std::exp(fam.series(*log_, c));
  return fam.series(data_, c);
}

double SphereFunction::at_angle(double theta) const {
  if (!circle_) return at_cosine(std::cos(theta));
  const auto X = fft_forward(log_ ? std::span<const double>(*log_) : std::span<const double>(data_));
  const int N = static_cast<int>(X.size());
  double v = X[0].real();
  for (int k = 1; k < N / 2; ++k) v += 2.0 * (X[k] * std::polar(1.0, k * theta)).real();
  v += X[N / 2].real() * std::cos(0.5 * N * theta);
  v /= N;
  return log_ ? std::exp(v) : v;
}

SphereFunction SphereFunction::plus(double a, const SphereFunction& x) const {
  require_same_kind(*this, x);
  std::vector<double> out(std::max(data_.size(), x.data_.size()), 0.0);
  for (std::size_t i = 0; i < data_.size(); ++i) out[i] = data_[i];
  for (std::size_t i = 0; i < x.data_.size(); ++i) out[i] += a * x.data_[i];
  SphereFunction r(d_, circle_, std::move(out), std::nullopt);
  // Combination of even functions stays even even if rounding left residue.
  if (even_ && x.even_ && !circle_) {
    for (std::size_t l = 1; l < r.data_.size(); l += 2) r.data_[l] = 0.0;
    r.even_ = true;
  }
  return r;
}

SphereFunction SphereFunction::resampled(int M) const {
  if (!circle_) throw DomainError("only circle functions can be resampled");
  if (M < 4 || M % 2 != 0) throw DomainError("resampling needs an even M >= 4");
  auto resample = [M](std::span<const double> v) {
    const auto X = fft_forward(v);
    const int N = static_cast<int>(X.size());
    std::vector<cplx> Y(M, cplx(0.0));
    const int K = std::min(N, M) / 2;
    const double scale = static_cast<double>(M) / N;
    for (int k = 0; k < K; ++k) {
      Y[k] = X[k] * scale;
      if (k > 0) Y[M - k] = X[N - k] * scale;
    }
    if (M == N) {
      Y[K] = X[K] * scale;
    } else if (M > N) {
      // The source Nyquist mode is cos(K theta); split it across +-K.
      Y[K] = 0.5 * X[K] * scale;
      Y[M - K] = Y[K];
    } else {
      Y[K] = (X[K] + X[N - K]) * scale;
    }
    return fft_inverse(Y);
  };
  if (log_) {
    auto g = resample(*log_);
    std::vector<double> v(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) v[i] = std::exp(g[i]);
    return SphereFunction(d_, true, std::move(v), std::move(g));
  }
  return SphereFunction(d_, true, resample(data_), std::nullopt);
}

SphereFunction project_zonal(Dimension d, const std::function<double(double)>& f, int L) {
  if (L < 0) throw DomainError("projection degree must be >= 0");
  const auto grid = zonal_grid(d, L + 32);
  std::vector<double> vals(grid.x.size());
  for (std::size_t i = 0; i < vals.size(); ++i) vals[i] = f(grid.x[i]);
  return SphereFunction::zonal(d, project_values(d, grid, vals, L));
}

// ---------------------------------------------------------------------------
// Operators
// ---------------------------------------------------------------------------

SphereFunction spectral_multiply(const SphereFunction& F, const std::function<double(int)>& m) {
  const bool even = F.even();
  // Odd modes of an even function are rounding residue; drop them so that
  // multipliers without odd values (kernels singular at c = -1) still act.
  auto mult = [&](int l) { return (even && l % 2 == 1) ? 0.0 : m(l); };
  if (F.is_circle()) return SphereFunction::circle(circle_multiply(F.data(), mult));
  std::vector<double> a(F.data().begin(), F.data().end());
  for (std::size_t l = 0; l < a.size(); ++l)
    if (a[l] != 0.0) a[l] *= mult(static_cast<int>(l));
  return SphereFunction::zonal(F.dim(), std::move(a));
}

SphereFunction apply_B(const KernelSpectrum& spec, const SphereFunction& F) {
  if (!(spec.d == F.dim())) throw DomainError("spectrum and function live on different spheres");
  if (F.band_limit() > spec.max_degree())
    throw BandLimitExceeded("function band " + std::to_string(F.band_limit()) + " exceeds spectrum degree " +
                            std::to_string(spec.max_degree()));
  const bool even = F.even();
  return spectral_multiply(F, [&](int l) { return -spectrum_at(spec, l, even); });
}

SphereFunction apply_laplacian(const SphereFunction& F) {
  const Dimension d = F.dim();
  return spectral_multiply(F, [d](int l) { return -laplace_eigenvalue(d, l); });
}

SphereFunction gamma_delta(const SphereFunction& F, const SphereFunction& G) {
  require_same_kind(F, G);
  if (F.is_circle()) {
    const auto fd = circle_derivative(F.data());
    const auto gd = circle_derivative(G.data());
    std::vector<double> v(fd.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = fd[i] * gd[i];
    return SphereFunction::circle(std::move(v));
  }
  const Dimension d = F.dim();
  const int L = F.band_limit() + G.band_limit();
  const auto grid = zonal_grid(d, L + 2);
  const PolyFamily fam(d, std::max(F.band_limit(), G.band_limit()));
  std::vector<double> p, dp, vals(grid.x.size());
  for (std::size_t i = 0; i < vals.size(); ++i) {
    const double c = grid.x[i];
    const auto f = series_with_slope(fam, F.data(), c, p, dp);
    const auto g = series_with_slope(fam, G.data(), c, p, dp);
    vals[i] = (1.0 - c * c) * f.dv * g.dv;
  }
  auto a = project_values(d, grid, vals, L);
  if (F.even() && G.even())
    for (int l = 1; l <= L; l += 2) a[l] = 0.0;
  return SphereFunction::zonal(d, std::move(a));
}

SphereFunction gamma2_mixed(const KernelSpectrum& spec, const SphereFunction& F, const SphereFunction& G) {
  const auto BF = apply_B(spec, F);
  const auto BG = apply_B(spec, G);
  const auto t1 = apply_B(spec, gamma_delta(F, G));
  const auto sum = t1.plus(-1.0, gamma_delta(BF, G)).plus(-1.0, gamma_delta(F, BG));
  return sum.plus(-0.5, sum);
}

double integrate(const SphereFunction& F) {
  if (F.is_circle()) return circle_integral(F.data());
  return F.data()[0] * surface_area(F.dim().value());
}

double min_value(const SphereFunction& F) {
  if (F.is_circle()) return *std::min_element(F.data().begin(), F.data().end());
  ZonalEvaluator ev(F);
  const auto grid = zonal_grid(F.dim(), functional_nodes(F));
  double m = std::min(ev.value(1.0), ev.value(-1.0));
  for (double c : grid.x) m = std::min(m, ev.value(c));
  return m;
}

double fisher(const SphereFunction& F) {
  if (F.is_circle()) {
    const auto& v = F.data();
    if (!(*std::min_element(v.begin(), v.end()) > 0.0)) throw NonPositive("Fisher information needs F > 0");
    std::vector<double> integrand(v.size());
    if (F.log_data()) {
      const auto gd = circle_derivative(*F.log_data());
      for (std::size_t i = 0; i < v.size(); ++i) integrand[i] = gd[i] * gd[i] * v[i];
    } else {
      const auto fd = circle_derivative(v);
      for (std::size_t i = 0; i < v.size(); ++i) integrand[i] = fd[i] * fd[i] / v[i];
    }
    return circle_integral(integrand);
  }
  ZonalEvaluator ev(F);
  const auto grid = zonal_grid(F.dim(), functional_nodes(F));
  double acc = 0.0;
  for (std::size_t i = 0; i < grid.x.size(); ++i) {
    const double c = grid.x[i];
    const auto f = ev(c);
    if (!(f.v > 0.0)) throw NonPositive("Fisher information needs F > 0");
    acc += grid.w[i] * (1.0 - c * c) * f.dv * f.dv / f.v;
  }
  return acc;
}

double entropy(const SphereFunction& F) {
  if (F.is_circle()) {
    std::vector<double> v(F.data().begin(), F.data().end());
    for (double& x : v) {
      if (!(x > 0.0)) throw NonPositive("entropy needs F > 0");
      x *= std::log(x);
    }
    return circle_integral(v);
  }
  ZonalEvaluator ev(F);
  const auto grid = zonal_grid(F.dim(), functional_nodes(F));
  double acc = 0.0;
  for (std::size_t i = 0; i < grid.x.size(); ++i) {
    const double v = ev.value(grid.x[i]);
    if (!(v > 0.0)) throw NonPositive("entropy needs F > 0");
    acc += grid.w[i] * v * std::log(v);
  }
  return acc;
}

// \int Gamma^2_{B,Delta}(g, g) F with g = log F, as
//   1/2 \int Gamma(g,g) BF - \int Gamma(Bg, g) F.
double gamma2_log_integral(const KernelSpectrum& spec, const SphereFunction& F) {
  if (!(spec.d == F.dim())) throw DomainError("spectrum and function live on different spheres");
  const bool even = F.even();
  const auto g = log_representation(F);
  if (F.is_circle()) {
    const auto BF = apply_B(spec, F);
    const auto Bg = circle_multiply(g, [&](int l) { return -spectrum_at(spec, l, even); });
    const auto gd = circle_derivative(g);
    const auto Bgd = circle_derivative(Bg);
    const auto& f = F.data();
    std::vector<double> integrand(f.size());
    for (std::size_t i = 0; i < f.size(); ++i)
      integrand[i] = 0.5 * gd[i] * gd[i] * BF.data()[i] - Bgd[i] * gd[i] * f[i];
    return circle_integral(integrand);
  }
  const Dimension d = F.dim();
  const auto BF = apply_B(spec, F);
  std::vector<double> Bg(g.size());
  for (std::size_t l = 0; l < g.size(); ++l)
    Bg[l] = g[l] == 0.0 ? 0.0 : -spectrum_at(spec, static_cast<int>(l), even) * g[l];
  const int L = std::max<int>(F.band_limit(), static_cast<int>(g.size()) - 1);
  const PolyFamily fam(d, L);
  ZonalEvaluator ev(F);
  const auto grid = zonal_grid(d, F.band_limit() + 2 * static_cast<int>(g.size()) + 32);
  std::vector<double> p, dp;
  double acc = 0.0;
  for (std::size_t i = 0; i < grid.x.size(); ++i) {
    const double c = grid.x[i];
    const double s = 1.0 - c * c;
    const auto gv = series_with_slope(fam, g, c, p, dp);
    const auto bg = series_with_slope(fam, Bg, c, p, dp);
    const double bf = fam.series(BF.data(), c);
    const double f = ev.value(c);
    acc += grid.w[i] * (0.5 * s * gv.dv * gv.dv * bf - s * bg.dv * gv.dv * f);
  }
  return acc;
}

// ---------------------------------------------------------------------------
// Pair averages S(c) and the double integrals built on them
// ---------------------------------------------------------------------------

namespace {

// P_l-coefficients s_l of the average S(c) of h(F(sigma), F(sigma')) over pairs
// with sigma.sigma' = c, together with the factor that turns
// \int S(e.sigma') b(e.sigma') dsigma' into the double integral.
struct PairSeries {
  std::vector<double> s;
  double scale = 1.0;
  double s_at_one = 0.0;  ///< S(1) reconstructed from the series
  double s_max = 0.0;
};

template <class H>
PairSeries circle_pair_series(const SphereFunction& F, H&& h) {
  const auto& f = F.data();
  const int N = static_cast<int>(f.size());
  std::vector<double> Hj(N, 0.0);
  const double dtheta = 2.0 * pi / N;
  for (int j = 0; j < N; ++j) {
    double acc = 0.0;
    for (int i = 0; i < N; ++i) acc += h(f[i], f[(i + j) % N]);
    Hj[j] = acc * dtheta;
  }
  const auto X = fft_forward(Hj);
  PairSeries ps;
  ps.s.assign(N / 2 + 1, 0.0);
  ps.s[0] = X[0].real() / N;
  for (int k = 1; k < N / 2; ++k) ps.s[k] = 2.0 * X[k].real() / N;
  ps.s[N / 2] = X[N / 2].real() / N;
  ps.scale = 1.0;
  for (double v : ps.s) ps.s_at_one += v;
  for (double v : Hj) ps.s_max = std::max(ps.s_max, std::abs(v));
  return ps;
}

template <class H>
PairSeries zonal_pair_series(const SphereFunction& F, int n, int L, H&& h) {
  const Dimension d = F.dim();
  const double m = d.measure_exponent();
  const auto rc = gauss_jacobi(n, m, m);
  const auto rx = rc;
  const double mt = 0.5 * (d.value() - 4);
  const auto rt = gauss_jacobi(n, mt, mt);
  double mx = 0.0, mtot = 0.0;
  for (double w : rx->weights()) mx += w;
  for (double w : rt->weights()) mtot += w;

  ZonalEvaluator ev(F);
  std::vector<double> fx(n), sx(n);
  for (int i = 0; i < n; ++i) {
    fx[i] = ev.value(rx->nodes()[i]);
    sx[i] = std::sqrt(std::max(0.0, 1.0 - rx->nodes()[i] * rx->nodes()[i]));
  }
  const bool even = F.even();
  std::vector<double> S(n, 0.0);
  for (int ic = 0; ic < n; ++ic) {
    const double c = rc->nodes()[ic];
    // S is even in c for even F: compute the c >= 0 half and mirror.
    if (even && c < 0.0 && n - 1 - ic > ic) continue;
    const double sc = std::sqrt(std::max(0.0, 1.0 - c * c));
    double acc = 0.0;
    for (int ix = 0; ix < n; ++ix) {
      double inner = 0.0;
      for (int it = 0; it < n; ++it) {
        const double y = std::clamp(c * rx->nodes()[ix] + sc * sx[ix] * rt->nodes()[it], -1.0, 1.0);
        inner += rt->weights()[it] * h(fx[ix], ev.value(y));
      }
      acc += rx->weights()[ix] * inner;
    }
    S[ic] = acc / (mx * mtot);
  }
  if (even)
    for (int ic = 0; ic < n; ++ic)
      if (rc->nodes()[ic] < 0.0) S[ic] = S[n - 1 - ic];

  ZonalGrid grid;
  grid.x.assign(rc->nodes().begin(), rc->nodes().end());
  grid.w.resize(n);
  const double area = surface_area(d.value() - 1);
  for (int i = 0; i < n; ++i) grid.w[i] = area * rc->weights()[i];
  PairSeries ps;
  ps.s = project_values(d, grid, S, L);
  if (even)
    for (int l = 1; l <= L; l += 2) ps.s[l] = 0.0;
  ps.scale = surface_area(d.value());
  for (double v : ps.s) ps.s_at_one += v;
  for (double v : S) ps.s_max = std::max(ps.s_max, std::abs(v));
  return ps;
}

// -scale sum_l s_l lambda~_l, valid because S(1) = 0.
double spectral_pair_integral(const KernelSpectrum& spec, const PairSeries& ps, bool even) {
  double acc = 0.0;
  for (std::size_t l = 1; l < ps.s.size(); ++l) {
    if (ps.s[l] == 0.0) continue;
    acc += ps.s[l] * spectrum_at(spec, static_cast<int>(l), even);
  }
  return -ps.scale * acc;
}

// scale \int S(c) b(c) over the sphere from the kernel itself, writing
// S(c) = -(1 - c^2) sum_l s_l (1 - P_l(c)) / (1 - c^2) so that the vanishing
// at c = +-1 is explicit and no cancellation occurs.
double direct_pair_integral(const KernelSpec& k, const PairSeries& ps, bool even) {
  if (!even) throw DomainError("direct pair quadrature is implemented for even functions");
  const Dimension d = k.dim();
  const int L = static_cast<int>(ps.s.size()) - 1;
  const PolyFamily fam(d, std::max(L, 1));
  const auto ex = k.exponents();
  ZonalProfile prof;
  prof.exp_plus = ex.plus + 1.0;
  prof.exp_minus = ex.minus + 1.0;
  prof.smooth = [&, q = std::vector<double>(L + 1)](double c) mutable {
    const double ac = std::abs(c);
    fam.one_minus_ratio_all(ac, q);
    double r = 0.0;
    for (int l = 2; l <= L; l += 2) r += ps.s[l] * q[l];
    return -r / (1.0 + ac) * k.smooth_part(c);
  };
  return ps.scale * zonal_integral(prof, d, 64);
}

double logsob_h(double a, double b) {
  const double diff = a - b;
  return diff * diff / (a + b);
}

double square_h(double a, double b) {
  const double diff = a - b;
  return diff * diff;
}

struct LogSobPass {
  double lhs;
  double rhs;
  double rhs_direct;
};

}  // namespace

InequalityReport logsob_sides(const KernelSpectrum& spec, const KernelSpec& k, const SphereFunction& F,
                              const LogSobOptions& opts) {
  if (!(spec.d == F.dim()) || !(k.dim() == F.dim())) throw DomainError("spectrum, kernel and function disagree on d");
  if (!F.even()) throw DomainError("the log-Sobolev inequality is stated for even functions");
  if (!(min_value(F) > 0.0)) throw NonPositive("log-Sobolev sides need F > 0");
  const double nan = std::numeric_limits<double>::quiet_NaN();

  auto pass_at = [&](const SphereFunction& G, const PairSeries& ps) {
    LogSobPass r;
    r.lhs = gamma2_log_integral(spec, G);
    r.rhs = spectral_pair_integral(spec, ps, true);
    r.rhs_direct = opts.crosscheck ? direct_pair_integral(k, ps, true) : nan;
    return r;
  };
  auto settled = [&](const LogSobPass& a, const LogSobPass& b) {
    const auto close = [&](double x, double y) {
      return std::abs(x - y) <= opts.settle_tol * std::max({std::abs(x), std::abs(y), 1e-300});
    };
    return close(a.lhs, b.lhs) && close(a.rhs, b.rhs);
  };

  InequalityReport rep;
  LogSobPass cur{};
  if (F.is_circle()) {
    int N = F.grid_size();
    SphereFunction G = F;
    LogSobPass prev = pass_at(G, circle_pair_series(G, logsob_h));
    for (;;) {
      if (2 * N > 16384) throw QuadratureNotConverged("log-Sobolev sides did not settle on the circle");
      if (N > spec.max_degree())
        throw BandLimitExceeded("circle grid " + std::to_string(2 * N) + " needs the spectrum to degree " +
                                std::to_string(N));
      N *= 2;
      G = F.resampled(N);
      cur = pass_at(G, circle_pair_series(G, logsob_h));
      if (settled(prev, cur)) break;
      prev = cur;
    }
    rep.resolution = N;
  } else {
    // exp(G) is resolved by far fewer pair nodes than its coefficient count
    // suggests, so start from the band of G when it is known.
    int n = F.log_data() ? std::max(32, 4 * log_degree(F) + 16) : std::max(32, F.band_limit() / 2 + 16);
    auto series_at = [&](int nodes) {
      const int L = std::min(nodes - 1, spec.max_degree());
      return zonal_pair_series(F, nodes, L, logsob_h);
    };
    auto ps = series_at(n);
    LogSobPass prev = pass_at(F, ps);
    for (;;) {
      if (2 * n > 512) throw QuadratureNotConverged("log-Sobolev sides did not settle by 512 nodes");
      n *= 2;
      ps = series_at(n);
      cur = pass_at(F, ps);
      if (settled(prev, cur) && std::abs(ps.s_at_one) <= 1e-10 * std::max(ps.s_max, 1e-300)) break;
      prev = cur;
    }
    rep.resolution = n;
  }
  rep.lhs = cur.lhs;
  rep.rhs = cur.rhs;
  rep.rhs_check = cur.rhs_direct;
  rep.ratio = rep.rhs > 0.0 ? rep.lhs / rep.rhs : 0.0;
  rep.bound_used = opts.lambda;
  rep.margin = rep.lhs - opts.lambda * rep.rhs;
  return rep;
}

InequalityReport hardy_sides(const KernelSpectrum& spec, const SphereFunction& F, double c_p) {
  if (!(spec.d == F.dim())) throw DomainError("spectrum and function live on different spheres");
  const bool even = F.even();
  double lhs = 0.0, rhs = 0.0;
  if (F.is_circle()) {
    const auto X = fft_forward(F.data());
    const int N = static_cast<int>(X.size());
    for (int k = 1; k < N; ++k) {
      const int l = std::abs(wavenumber(k, N));
      if (even && l % 2 == 1) continue;
      const double a2 = std::norm(X[k]) / (static_cast<double>(N) * N) * 2.0 * pi;
      lhs += 2.0 * spectrum_at(spec, l, even) * a2;
      rhs += laplace_eigenvalue(spec.d, l) * a2;
    }
  } else {
    const auto a = F.data();
    for (std::size_t l = 1; l < a.size(); ++l) {
      const int li = static_cast<int>(l);
      if (even && l % 2 == 1) continue;
      const double a2 = a[l] * a[l] * zonal_norm(F.dim(), li);
      lhs += 2.0 * spectrum_at(spec, li, even) * a2;
      rhs += laplace_eigenvalue(F.dim(), li) * a2;
    }
  }
  InequalityReport rep;
  rep.lhs = lhs;
  rep.rhs = rhs;
  rep.ratio = rhs > 0.0 ? lhs / rhs : 0.0;
  rep.bound_used = c_p;
  rep.margin = c_p * rhs - lhs;
  rep.resolution = F.is_circle() ? F.grid_size() : F.band_limit();
  return rep;
}

DirichletFormReport dirichlet_form_check(const KernelSpectrum& spec, const KernelSpec& k, const SphereFunction& F) {
  if (!F.even()) throw DomainError("the Dirichlet-form check is implemented for even functions");
  DirichletFormReport rep;
  rep.spectral = hardy_sides(spec, F, 0.0).lhs;
  if (F.is_circle()) {
    rep.direct = direct_pair_integral(k, circle_pair_series(F, square_h), true);
  } else {
    // (F(x) - F(y))^2 is a polynomial of degree 2L, so 2L + 2 nodes integrate it exactly.
    const int n = 2 * F.band_limit() + 2;
    rep.direct = direct_pair_integral(k, zonal_pair_series(F, n, n - 1, square_h), true);
  }
  rep.rel_error = std::abs(rep.direct - rep.spectral) / std::max(std::abs(rep.spectral), 1e-300);
  return rep;
}

GateauxReport gateaux_identity_check(const KernelSpectrum& spec, const SphereFunction& F, double dt) {
  if (!(dt > 0.0)) throw DomainError("dt must be positive");
  const auto BF = apply_B(spec, F);
  auto quotient = [&](double h) {
    const auto fp = F.plus(h, BF);
    const auto fm = F.plus(-h, BF);
    if (!(min_value(fp) > 0.0) || !(min_value(fm) > 0.0))
      throw StepTooLarge("F +- dt BF is not positive at dt=" + std::to_string(h));
    return (fisher(fp) - fisher(fm)) / (2.0 * h);
  };
  GateauxReport rep;
  rep.finite_difference = quotient(dt);
  rep.finite_difference_half = quotient(0.5 * dt);
  rep.analytic = -2.0 * gamma2_log_integral(spec, F);
  const double scale = std::max({std::abs(rep.analytic), std::abs(rep.finite_difference), 1e-300});
  const double quad_term = 4.0 / 3.0 * std::abs(rep.finite_difference - rep.finite_difference_half);
  if (quad_term > 1e-3 * scale && scale > 1e-300)
    throw StepTooLarge("second-order term of the difference quotient dominates at dt=" + std::to_string(dt));
  const double defect = std::abs(rep.finite_difference - rep.analytic);
  const double defect_half = std::abs(rep.finite_difference_half - rep.analytic);
  rep.rel_error = (rep.analytic == 0.0 && rep.finite_difference == 0.0) ? 0.0 : defect / scale;
  rep.richardson_ratio = defect_half > 0.0 ? defect / defect_half : 0.0;
  return rep;
}

// ---------------------------------------------------------------------------
// Villani gradient lemma on S^2
// ---------------------------------------------------------------------------

namespace {

// Orthonormal pair spanning rho^perp.
std::pair<Eigen::Vector3d, Eigen::Vector3d> frame(const Eigen::Vector3d& rho) {
  Eigen::Vector3d a = std::abs(rho.x()) < 0.9 ? Eigen::Vector3d::UnitX() : Eigen::Vector3d::UnitY();
  Eigen::Vector3d u = (a - a.dot(rho) * rho).normalized();
  return {u, rho.cross(u)};
}

// \int f(sigma') b(rho.sigma') dsigma' with the pole of the coordinates at rho.
template <class Fn>
double pole_integral(const KernelSpec& k, const Eigen::Vector3d& rho, int n, Fn&& f) {
  const auto rule = gauss_legendre(n);
  const auto [u, v] = frame(rho);
  const int nphi = 2 * n;
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    const double c = rule->nodes()[i];
    const double s = std::sqrt(1.0 - c * c);
    double ring = 0.0;
    for (int j = 0; j < nphi; ++j) {
      const double phi = 2.0 * pi * j / nphi;
      const Eigen::Vector3d sp = c * rho + s * (std::cos(phi) * u + std::sin(phi) * v);
      ring += f(sp);
    }
    acc += rule->weights()[i] * k(c) * ring * (2.0 * pi / nphi);
  }
  return acc;
}

}  // namespace

VillaniReport villani_gradient_check(const KernelSpec& k, const AxisZonal& G, const Eigen::Vector3d& sigma,
                                     const Eigen::Vector3d& e, double h, int nodes) {
  if (k.dim().value() != 3) throw DomainError("the gradient-lemma check is implemented on S^2");
  if (!k.is_smooth()) throw KernelNotSmooth("kernel " + k.id() + " is not C^1 on [-1,1]");
  if (!(h > 0.0)) throw DomainError("h must be positive");
  if (G.coeffs.empty()) throw DomainError("G needs coefficients");
  const TangentVector te(sigma, e);
  if (std::abs(e.norm() - 1.0) > kGeometryTol) throw DomainError("e must be a unit vector");
  if (std::abs(G.axis.norm() - 1.0) > kGeometryTol) throw DomainError("axis must be a unit vector");

  const int L = static_cast<int>(G.coeffs.size()) - 1;
  const PolyFamily fam(Dimension(3), std::max(L, 1));
  std::vector<double> p(L + 1), dp(L + 1);
  auto g_and_slope = [&](double c) {
    fam.eval_all(std::clamp(c, -1.0, 1.0), p, dp);
    double v = 0.0, dv = 0.0;
    for (int l = 0; l <= L; ++l) {
      v += G.coeffs[l] * p[l];
      dv += G.coeffs[l] * dp[l];
    }
    return std::pair{v, dv};
  };
  auto value = [&](const Eigen::Vector3d& sp) { return g_and_slope(G.axis.dot(sp)).first; };

  const Eigen::Vector3d s_plus = std::cos(h) * sigma + std::sin(h) * e;
  const Eigen::Vector3d s_minus = std::cos(h) * sigma - std::sin(h) * e;
  VillaniReport rep;
  rep.finite_difference =
      (pole_integral(k, s_plus, nodes, value) - pole_integral(k, s_minus, nodes, value)) / (2.0 * h);
  rep.quadrature = pole_integral(k, sigma, nodes, [&](const Eigen::Vector3d& sp) {
    const double ac = G.axis.dot(sp);
    const Eigen::Vector3d grad = g_and_slope(ac).second * (G.axis - ac * sp);
    // M_{sigma',sigma}(x) = (sigma'.sigma) x - (sigma.x) sigma'
    const Eigen::Vector3d mx = sp.dot(sigma) * grad - sigma.dot(grad) * sp;
    return mx.dot(e);
  });
  // Both sides vanish identically for a constant kernel, so the error is
  // measured against the size of the integrand rather than of the result.
  const double gradient_size = pole_integral(k, sigma, nodes, [&](const Eigen::Vector3d& sp) {
    const double ac = G.axis.dot(sp);
    return std::abs(g_and_slope(ac).second) * std::sqrt(std::max(0.0, 1.0 - ac * ac));
  });
  const double scale =
      std::max({std::abs(rep.quadrature), std::abs(rep.finite_difference), std::abs(gradient_size), 1e-300});
  rep.rel_error = std::abs(rep.finite_difference - rep.quadrature) / scale;
  return rep;
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  // splitmix64 applied to a golden-ratio stride of the index.
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

SphereFunction random_even_exponent(Dimension d, const SamplerSpec& s, std::mt19937_64& rng) {
  if (s.bandwidth < 2) throw DomainError("sampler bandwidth must be >= 2");
  if (!(s.amplitude > 0.0) || s.amplitude > 3.0) throw DomainError("sampler amplitude must lie in (0, 3]");
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double u = 1.0 - unif(rng);
  if (d.value() == 2) {
    const int N = s.circle_grid;
    if (N < 4 || N % 2 || 2 * s.bandwidth >= N) throw DomainError("circle grid too small for the bandwidth");
    std::vector<double> a, b;
    double bound = 0.0;
    for (int kf = 2; kf <= s.bandwidth; kf += 2) {
      a.push_back(normal(rng));
      b.push_back(normal(rng));
      bound += std::hypot(a.back(), b.back());
    }
    const double scale = s.amplitude * u / bound;
    std::vector<double> v(N, 0.0);
    for (int j = 0; j < N; ++j) {
      const double th = 2.0 * pi * j / N;
      for (std::size_t i = 0; i < a.size(); ++i) {
        const int kf = 2 * static_cast<int>(i + 1);
        v[j] += scale * (a[i] * std::cos(kf * th) + b[i] * std::sin(kf * th));
      }
    }
    return SphereFunction::circle(std::move(v));
  }
  std::vector<double> c(s.bandwidth + 1, 0.0);
  double bound = 0.0;
  for (int l = 2; l <= s.bandwidth; l += 2) {
    c[l] = normal(rng);
    bound += std::abs(c[l]);
  }
  for (double& x : c) x *= s.amplitude * u / bound;
  return SphereFunction::zonal(d, std::move(c));
}

EmpiricalReport empirical_lambda(const KernelSpectrum& spec, const KernelSpec& k, const SamplerSpec& s, std::size_t n,
                                 unsigned threads) {
  if (n < 1) throw DomainError("empirical_lambda needs n >= 1");
  constexpr int kMaxRedraws = 8;
  constexpr double kDegenerate = 1e-14;
  std::vector<double> ratios(n, std::numeric_limits<double>::quiet_NaN());
  std::vector<int> redraws(n, 0);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        std::mt19937_64 rng(derive_seed(s.seed, i));
        for (int attempt = 0; attempt <= kMaxRedraws; ++attempt) {
          const auto F = SphereFunction::exp_of(random_even_exponent(spec.d, s, rng));
          const auto rep = logsob_sides(spec, k, F);
          if (rep.rhs >= kDegenerate) {
            ratios[i] = rep.ratio;
            break;
          }
          ++redraws[i];
        }
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
        next.store(n);
      }
    }
  };

  unsigned nt = threads ? threads : std::max(1u, std::thread::hardware_concurrency());
  nt = static_cast<unsigned>(std::min<std::size_t>(nt, n));
  if (nt <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < nt; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  EmpiricalReport rep;
  rep.samples = n;
  rep.min_ratio = std::numeric_limits<double>::infinity();
  bool any = false;
  for (std::size_t i = 0; i < n; ++i) {
    rep.redraws += static_cast<std::size_t>(redraws[i]);
    if (std::isnan(ratios[i])) continue;
    any = true;
    if (ratios[i] < rep.min_ratio) {
      rep.min_ratio = ratios[i];
      rep.argmin = i;
    }
  }
  if (!any) throw AllDegenerate("every sampled test function had a vanishing right-hand side");
  rep.argmin_seed = derive_seed(s.seed, rep.argmin);
  rep.ratios = std::move(ratios);
  return rep;
}

}  // namespace sphkern
