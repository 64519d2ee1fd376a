#include "sphkern/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <random>

#include <CLI11.hpp>

#include "sphkern/constants.hpp"
#include "sphkern/errors.hpp"
#include "sphkern/flow.hpp"
#include "sphkern/gegenbauer.hpp"
#include "sphkern/verifier.hpp"

namespace sphkern::cli {

namespace {

constexpr const char* kVersion = "1.0.0";

// ---------------------------------------------------------------------------
// Typed access to config values
// ---------------------------------------------------------------------------

Json section(const Json& root, const char* name) {
  if (!root.contains(name)) return Json::object();
  const Json& s = root.at(name);
  if (!s.is_object()) throw ConfigError(std::string("section '") + name + "' must be an object");
  return s;
}

long long get_int(const Json& j, const char* key, const std::string& where, long long fallback, long long lo,
                  long long hi) {
  if (!j.contains(key)) return fallback;
  const Json& v = j.at(key);
  if (!v.is_number_integer()) throw ConfigError(where + "." + key + " must be an integer");
  const auto x = v.get<long long>();
  if (x < lo || x > hi)
    throw ConfigError(where + "." + key + " = " + std::to_string(x) + " is outside [" + std::to_string(lo) + ", " +
                      std::to_string(hi) + "]");
  return x;
}

double get_real(const Json& j, const char* key, const std::string& where, double fallback, double lo, double hi) {
  if (!j.contains(key)) return fallback;
  const double x = number_from_json(j.at(key), where + "." + key);
  if (!(x >= lo && x <= hi))
    throw ConfigError(where + "." + key + " is outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  return x;
}

bool get_bool(const Json& j, const char* key, const std::string& where, bool fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_boolean()) throw ConfigError(where + "." + key + " must be true or false");
  return j.at(key).get<bool>();
}

std::vector<double> get_reals(const Json& j, const char* key, const std::string& where) {
  const Json& v = j.at(key);
  if (!v.is_array()) throw ConfigError(where + "." + key + " must be an array");
  std::vector<double> out;
  for (const auto& x : v) out.push_back(number_from_json(x, where + "." + key));
  return out;
}

const KernelSpec& require_kernel(const Config& cfg) {
  if (!cfg.kernel) throw ConfigError("this command needs a 'kernel' section");
  return *cfg.kernel;
}

// ---------------------------------------------------------------------------
// Section parsers (also run by parse_config for validation)
// ---------------------------------------------------------------------------

struct AnalyzeOptions {
  std::optional<KernelSpec> reference;
  std::optional<double> reference_lambda;
  std::optional<AlphaSpec> alpha;
  std::pair<double, double> r_range{1e-3, 1e3};
  int compare_grid = 4097;
};

AnalyzeOptions analyze_options(const Json& root) {
  const Json s = section(root, "analyze");
  reject_unknown(s, {"reference", "reference_lambda", "alpha", "r_range", "compare_grid"}, "analyze");
  AnalyzeOptions o;
  if (s.contains("reference")) o.reference = kernel_from_json(s.at("reference"));
  if (s.contains("reference_lambda")) {
    if (!o.reference) throw ConfigError("analyze.reference_lambda needs analyze.reference");
    o.reference_lambda = get_real(s, "reference_lambda", "analyze", 0.0, 0.0, 1e12);
  }
  if (s.contains("alpha")) o.alpha = alpha_from_json(s.at("alpha"));
  if (s.contains("r_range")) {
    const auto r = get_reals(s, "r_range", "analyze");
    if (r.size() != 2 || !(r[0] > 0.0) || !(r[1] >= r[0]) || !std::isfinite(r[1]))
      throw ConfigError("analyze.r_range must be [r_min, r_max] with 0 < r_min <= r_max < inf");
    o.r_range = {r[0], r[1]};
  }
  o.compare_grid = static_cast<int>(get_int(s, "compare_grid", "analyze", 4097, 3, 1 << 20));
  return o;
}

const std::vector<std::string> kAllChecks = {"legendre", "hardy", "gamma2", "logsob", "gateaux", "villani"};

struct VerifyOptions {
  std::vector<std::string> checks = kAllChecks;
  std::size_t samples = 20;
  std::size_t dirichlet_samples = 3;
  SamplerSpec sampler;
  double dt = 1e-5;
  double villani_h = 1e-4;
  int legendre_lmax = 40;
  int legendre_grid = 1001;
  bool negate_lambda2 = false;
};

VerifyOptions verify_options(const Json& root) {
  const Json s = section(root, "verify");
  reject_unknown(s,
                 {"checks", "samples", "dirichlet_samples", "bandwidth", "amplitude", "circle_grid", "dt", "villani_h",
                  "legendre_lmax", "legendre_grid", "fault"},
                 "verify");
  VerifyOptions o;
  if (s.contains("checks")) {
    if (!s.at("checks").is_array()) throw ConfigError("verify.checks must be an array of names");
    o.checks.clear();
    for (const auto& c : s.at("checks")) {
      if (!c.is_string()) throw ConfigError("verify.checks must be an array of names");
      const auto name = c.get<std::string>();
      if (std::find(kAllChecks.begin(), kAllChecks.end(), name) == kAllChecks.end())
        throw ConfigError("unknown check '" + name + "'");
      if (std::find(o.checks.begin(), o.checks.end(), name) == o.checks.end()) o.checks.push_back(name);
    }
  }
  o.samples = static_cast<std::size_t>(get_int(s, "samples", "verify", 20, 1, 1000000));
  o.dirichlet_samples = static_cast<std::size_t>(get_int(s, "dirichlet_samples", "verify", 3, 0, 1000));
  o.sampler.bandwidth = static_cast<int>(get_int(s, "bandwidth", "verify", 8, 2, 64));
  o.sampler.amplitude = get_real(s, "amplitude", "verify", 3.0, 1e-12, 3.0);
  o.sampler.circle_grid = static_cast<int>(get_int(s, "circle_grid", "verify", kDefaultCircleGrid, 8, 8192));
  if (o.sampler.circle_grid % 2 != 0) throw ConfigError("verify.circle_grid must be even");
  o.dt = get_real(s, "dt", "verify", 1e-5, 1e-12, 1.0);
  o.villani_h = get_real(s, "villani_h", "verify", 1e-4, 1e-8, 0.5);
  o.legendre_lmax = static_cast<int>(get_int(s, "legendre_lmax", "verify", 40, 1, 2000));
  o.legendre_grid = static_cast<int>(get_int(s, "legendre_grid", "verify", 1001, 3, 1000001));
  if (s.contains("fault")) {
    if (s.at("fault") != "negate_lambda2") throw ConfigError("verify.fault must be \"negate_lambda2\"");
    o.negate_lambda2 = true;
  }
  return o;
}

struct FlowOptions {
  bool heat = false;
  std::vector<double> times;
  std::size_t runs = 1;
  SamplerSpec sampler;
  std::optional<Json> initial;
  double slack = 1e-10;
  double decay_tol = 1e-3;
  bool entropy = true;
};

FlowOptions flow_options(const Json& root) {
  const Json s = section(root, "flow");
  reject_unknown(s,
                 {"generator", "times", "runs", "bandwidth", "amplitude", "circle_grid", "initial", "slack",
                  "decay_tol", "entropy"},
                 "flow");
  FlowOptions o;
  if (s.contains("generator")) {
    const Json& g = s.at("generator");
    if (g != "kernel" && g != "heat") throw ConfigError("flow.generator must be \"kernel\" or \"heat\"");
    o.heat = g == "heat";
  }
  if (!s.contains("times")) {
    for (int i = 0; i <= 20; ++i) o.times.push_back(i / 20.0);
  } else if (s.at("times").is_array()) {
    o.times = get_reals(s, "times", "flow");
  } else {
    const Json& t = s.at("times");
    reject_unknown(t, {"t_max", "steps"}, "flow.times");
    const double t_max = get_real(t, "t_max", "flow.times", 1.0, 1e-300, 1e6);
    const auto steps = get_int(t, "steps", "flow.times", 20, 1, 100000);
    for (long long i = 0; i <= steps; ++i) o.times.push_back(t_max * static_cast<double>(i) / static_cast<double>(steps));
  }
  if (o.times.empty()) throw ConfigError("flow.times is empty");
  for (std::size_t i = 0; i < o.times.size(); ++i) {
    if (!(o.times[i] >= 0.0) || !std::isfinite(o.times[i])) throw ConfigError("flow.times must be finite and >= 0");
    if (i > 0 && !(o.times[i] > o.times[i - 1]))
      throw ConfigError("flow.times must increase strictly (entry " + std::to_string(i) + ")");
  }
  o.runs = static_cast<std::size_t>(get_int(s, "runs", "flow", 1, 1, 100000));
  o.sampler.bandwidth = static_cast<int>(get_int(s, "bandwidth", "flow", 6, 2, 64));
  o.sampler.amplitude = get_real(s, "amplitude", "flow", 2.0, 1e-12, 3.0);
  o.sampler.circle_grid = static_cast<int>(get_int(s, "circle_grid", "flow", kDefaultCircleGrid, 8, 8192));
  if (o.sampler.circle_grid % 2 != 0) throw ConfigError("flow.circle_grid must be even");
  if (s.contains("initial")) {
    const Json& init = s.at("initial");
    reject_unknown(init, {"coeffs", "values", "log_coeffs", "log_values"}, "flow.initial");
    if (init.size() != 1) throw ConfigError("flow.initial takes exactly one of coeffs, values, log_coeffs, log_values");
    if (o.runs != 1) throw ConfigError("flow.initial fixes the initial datum; runs must be 1");
    o.initial = init;
  }
  o.slack = get_real(s, "slack", "flow", 1e-10, 0.0, 1.0);
  o.decay_tol = get_real(s, "decay_tol", "flow", 1e-3, 0.0, 1.0);
  o.entropy = get_bool(s, "entropy", "flow", true);
  return o;
}

struct LegendreOptions {
  std::vector<int> dims{2, 3, 4, 5, 6};
  int l_max = 40;
  int grid = 1001;
};

LegendreOptions legendre_options(const Json& root) {
  const Json s = section(root, "legendre_check");
  reject_unknown(s, {"dims", "l_max", "grid"}, "legendre_check");
  LegendreOptions o;
  if (s.contains("dims")) {
    if (!s.at("dims").is_array() || s.at("dims").empty())
      throw ConfigError("legendre_check.dims must be a non-empty array");
    o.dims.clear();
    for (const auto& d : s.at("dims")) {
      if (!d.is_number_integer() || d.get<int>() < 2) throw ConfigError("legendre_check.dims entries must be >= 2");
      o.dims.push_back(d.get<int>());
    }
  }
  o.l_max = static_cast<int>(get_int(s, "l_max", "legendre_check", 40, 1, 2000));
  o.grid = static_cast<int>(get_int(s, "grid", "legendre_check", 1001, 3, 1000001));
  return o;
}

struct CompareOptions {
  std::optional<KernelSpec> reference;
  int grid = 4097;
};

CompareOptions compare_options(const Json& root) {
  const Json s = section(root, "compare");
  reject_unknown(s, {"reference", "grid"}, "compare");
  CompareOptions o;
  if (s.contains("reference")) o.reference = kernel_from_json(s.at("reference"));
  o.grid = static_cast<int>(get_int(s, "grid", "compare", 4097, 3, 1 << 20));
  return o;
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

struct CheckResult {
  std::string status = "pass";  // pass | fail | skipped
  std::string message;
  Json details = Json::object();

  void fail(const std::string& why) {
    if (status != "fail") message = why;
    status = "fail";
  }
};

SphereFunction sample_function(Dimension d, const SamplerSpec& base, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return SphereFunction::exp_of(random_even_exponent(d, base, rng));
}

int auto_spectrum_degree(Dimension d, const SamplerSpec& s) {
  return d.value() == 2 ? s.circle_grid : std::max(64, 40 * s.bandwidth);
}

Json relative_summary(const std::vector<double>& v) {
  if (v.empty()) return nullptr;
  return Json{{"min", json_number(*std::min_element(v.begin(), v.end()))},
              {"max", json_number(*std::max_element(v.begin(), v.end()))}};
}

CheckResult check_legendre(Dimension d, const VerifyOptions& o) {
  CheckResult r;
  const auto rep = legendre_inequality_check(d, o.legendre_lmax, o.legendre_grid);
  r.details = to_json(rep);
  if (rep.max_violation > 1e-12) r.fail("violation " + std::to_string(rep.max_violation) + " exceeds 1e-12");
  return r;
}

CheckResult check_hardy(const KernelSpec& k, const KernelSpectrum& spec, const Config& cfg, const VerifyOptions& o) {
  CheckResult r;
  double cp = 0.0;
  try {
    cp = cp_spectral(spec);
  } catch (const TailNotCertified& e) {
    r.fail(e.what());
    return r;
  }
  r.details["c_P_spectral"] = json_number(cp);
  std::vector<double> ratios, dir_errors;
  for (std::size_t i = 0; i < o.samples; ++i) {
    const auto F = sample_function(k.dim(), o.sampler, task_seed(cfg.seed, "hardy", i));
    const auto rep = hardy_sides(spec, F, cp);
    ratios.push_back(rep.ratio);
    if (rep.margin < -1e-10 * rep.rhs) r.fail("sample " + std::to_string(i) + " exceeds C_P");
    if (i < o.dirichlet_samples) {
      const auto dir = dirichlet_form_check(spec, k, F);
      dir_errors.push_back(dir.rel_error);
      if (!(dir.rel_error <= 1e-8))
        r.fail("Dirichlet form of sample " + std::to_string(i) + " disagrees with the spectrum (rel. " +
               std::to_string(dir.rel_error) + ")");
    }
  }
  r.details["ratio"] = relative_summary(ratios);
  r.details["dirichlet_rel_error"] = relative_summary(dir_errors);
  return r;
}

CheckResult check_gamma2(const KernelSpec& k, const KernelSpectrum& spec, const Config& cfg, const VerifyOptions& o) {
  CheckResult r;
  if (k.dim().value() < 3) {
    r.status = "skipped";
    r.message = "the curvature constant needs d >= 3";
    return r;
  }
  const double ck = ck_curvature(k);
  r.details["c_K"] = json_number(ck);
  std::vector<double> ratios;
  for (std::size_t i = 0; i < o.samples; ++i) {
    const auto F = sample_function(k.dim(), o.sampler, task_seed(cfg.seed, "gamma2", i));
    const double ratio = gamma2_log_integral(spec, F) / fisher(F);
    ratios.push_back(ratio);
    if (ratio < ck * (1.0 - 1e-6)) r.fail("sample " + std::to_string(i) + " falls below C_K");
  }
  r.details["ratio"] = relative_summary(ratios);
  return r;
}

CheckResult check_logsob(const KernelSpec& k, const KernelSpectrum& spec, const Config& cfg, const VerifyOptions& o) {
  CheckResult r;
  double bound = 0.0;
  try {
    bound = assemble_lambda(k).lambda_b;
  } catch (const NoRouteApplicable& e) {
    r.status = "skipped";
    r.message = e.what();
    return r;
  }
  SamplerSpec s = o.sampler;
  s.seed = task_seed(cfg.seed, "logsob", 0);
  const auto rep = empirical_lambda(spec, k, s, o.samples, cfg.threads);
  r.details = to_json(rep);
  r.details["lambda_b"] = json_number(bound);
  if (rep.min_ratio < bound * (1.0 - 1e-6)) r.fail("empirical ratio falls below the assembled Lambda_b");
  return r;
}

CheckResult check_gateaux(const KernelSpec& k, const KernelSpectrum& spec, const Config& cfg, const VerifyOptions& o) {
  CheckResult r;
  std::vector<double> errors;
  for (std::size_t i = 0; i < o.samples; ++i) {
    const auto F = sample_function(k.dim(), o.sampler, task_seed(cfg.seed, "gateaux", i));
    const auto rep = gateaux_identity_check(spec, F, o.dt);
    errors.push_back(rep.rel_error);
    if (!(rep.rel_error <= 1e-6)) r.fail("sample " + std::to_string(i) + " has rel. error " + std::to_string(rep.rel_error));
  }
  r.details["rel_error"] = relative_summary(errors);
  return r;
}

CheckResult check_villani(const KernelSpec& k, const Config& cfg, const VerifyOptions& o) {
  CheckResult r;
  if (k.dim().value() != 3 || !k.is_smooth()) {
    r.status = "skipped";
    r.message = k.dim().value() != 3 ? "implemented on S^2 only" : "kernel is not C^1 on [-1,1]";
    return r;
  }
  std::vector<double> errors;
  const std::size_t n = std::min<std::size_t>(o.samples, 5);
  for (std::size_t i = 0; i < n; ++i) {
    std::mt19937_64 rng(task_seed(cfg.seed, "villani", i));
    std::normal_distribution<double> nd;
    auto unit = [&] {
      const Eigen::Vector3d v(nd(rng), nd(rng), nd(rng));
      return Eigen::Vector3d(v.normalized());
    };
    const Eigen::Vector3d sigma = unit();
    const Eigen::Vector3d raw = unit();
    const Eigen::Vector3d e = (raw - raw.dot(sigma) * sigma).normalized();
    const AxisZonal G{unit(), {0.0, 1.0, nd(rng), nd(rng)}};
    const auto rep = villani_gradient_check(k, G, sigma, e, o.villani_h);
    errors.push_back(rep.rel_error);
    if (!(rep.rel_error <= 1e-5)) r.fail("sample " + std::to_string(i) + " has rel. error " + std::to_string(rep.rel_error));
  }
  r.details["rel_error"] = relative_summary(errors);
  return r;
}

// ---------------------------------------------------------------------------
// flow helpers
// ---------------------------------------------------------------------------

SphereFunction initial_from_json(Dimension d, const Json& init) {
  const auto [key, value] = *init.items().begin();
  std::vector<double> v;
  for (const auto& x : value) v.push_back(number_from_json(x, "flow.initial." + key));
  if (key == "coeffs") return SphereFunction::zonal(d, v);
  if (key == "values") return SphereFunction::circle(v);
  if (key == "log_coeffs") return SphereFunction::exp_of(SphereFunction::zonal(d, v));
  return SphereFunction::exp_of(SphereFunction::circle(v));
}

std::string with_command(const std::string& summary, const std::string& command) { return command + ": " + summary; }

}  // namespace

// ---------------------------------------------------------------------------
// Public entry points
// ---------------------------------------------------------------------------

std::uint64_t task_seed(std::uint64_t master, const std::string& label, std::uint64_t index) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : label) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return derive_seed(derive_seed(master, h), index);
}

Config parse_config(const Json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  reject_unknown(j,
                 {"format", "kernel", "seed", "threads", "spectrum", "analyze", "verify", "flow", "legendre_check",
                  "compare"},
                 "config");
  if (!j.contains("format") || j.at("format") != kFormatVersion)
    throw ConfigError("config needs \"format\": " + std::to_string(kFormatVersion));
  Config c;
  c.raw = j;
  if (j.contains("kernel")) c.kernel = kernel_from_json(j.at("kernel"));
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_unsigned()) throw ConfigError("seed must be a non-negative integer");
    c.seed = j.at("seed").get<std::uint64_t>();
  }
  c.threads = static_cast<unsigned>(get_int(j, "threads", "config", 0, 0, 1024));
  const Json s = section(j, "spectrum");
  reject_unknown(s, {"L", "quadrature_order"}, "spectrum");
  if (s.contains("L")) c.spectrum_L = static_cast<int>(get_int(s, "L", "spectrum", 0, 2, 100000));
  c.quadrature_order =
      static_cast<int>(get_int(s, "quadrature_order", "spectrum", kDefaultQuadratureOrder, 2, kMaxQuadratureOrder));
  (void)analyze_options(j);
  (void)verify_options(j);
  (void)flow_options(j);
  (void)legendre_options(j);
  (void)compare_options(j);
  return c;
}

Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError("invalid JSON in " + path.string() + ": " + e.what());
  }
  return parse_config(j);
}

CommandResult cmd_analyze(const Config& cfg, SpectrumCache& cache) {
  const KernelSpec& k = require_kernel(cfg);
  const auto o = analyze_options(cfg.raw);
  AssembleOptions opts;
  opts.spectrum_L = cfg.spectrum_L.value_or(40);
  opts.spectrum = cache.get(k, opts.spectrum_L, cfg.quadrature_order);
  opts.reference = o.reference;
  opts.reference_lambda = o.reference_lambda;
  opts.alpha = o.alpha;
  opts.r_range = o.r_range;
  opts.compare_grid = o.compare_grid;
  const auto rep = assemble_lambda(k, opts);

  CommandResult res;
  res.report = to_json(rep);
  std::ostringstream os;
  os.precision(10);
  os << k.id() << " Lambda_b = " << rep.lambda_b;
  if (rep.criterion) {
    os << ", criterion " << (rep.criterion->passes ? "pass" : "fail") << " (" << rep.criterion->sup_quantity
       << " vs " << rep.criterion->threshold << ")";
    if (!rep.criterion->passes) res.exit_code = kCriterionFailed;
  }
  res.summary = os.str();
  return res;
}

CommandResult cmd_verify(const Config& cfg, SpectrumCache& cache) {
  const KernelSpec& k = require_kernel(cfg);
  const auto o = verify_options(cfg.raw);
  const bool needs_spectrum =
      std::any_of(o.checks.begin(), o.checks.end(), [](const std::string& c) { return c != "legendre" && c != "villani"; });
  std::optional<KernelSpectrum> spec;
  if (needs_spectrum) {
    spec = cache.get(k, cfg.spectrum_L.value_or(auto_spectrum_degree(k.dim(), o.sampler)), cfg.quadrature_order);
    if (o.negate_lambda2) spec->values.at(2) = -spec->values.at(2);
  }

  CommandResult res;
  Json checks = Json::object();
  std::size_t failed = 0, passed = 0, skipped = 0;
  for (const auto& name : o.checks) {
    CheckResult r;
    try {
      if (name == "legendre") r = check_legendre(k.dim(), o);
      else if (name == "hardy") r = check_hardy(k, *spec, cfg, o);
      else if (name == "gamma2") r = check_gamma2(k, *spec, cfg, o);
      else if (name == "logsob") r = check_logsob(k, *spec, cfg, o);
      else if (name == "gateaux") r = check_gateaux(k, *spec, cfg, o);
      else r = check_villani(k, cfg, o);
    } catch (const DivergentIntegral&) {
      throw;
    } catch (const Error& e) {
      r.fail(e.what());
    }
    if (r.status == "fail") ++failed;
    else if (r.status == "pass") ++passed;
    else ++skipped;
    Json entry{{"status", r.status}};
    if (!r.message.empty()) entry["message"] = r.message;
    entry["details"] = r.details;
    checks[name] = entry;
  }
  res.report["fault_injection"] = o.negate_lambda2 ? Json("negate_lambda2") : Json(nullptr);
  res.report["samples"] = o.samples;
  res.report["checks"] = checks;
  res.report["all_passed"] = failed == 0;
  res.exit_code = failed == 0 ? kOk : kCheckFailed;
  res.summary = k.id() + " " + std::to_string(passed) + " passed, " + std::to_string(failed) + " failed, " +
                std::to_string(skipped) + " skipped";
  return res;
}

CommandResult cmd_flow(const Config& cfg, SpectrumCache& cache) {
  const KernelSpec& k = require_kernel(cfg);
  const Dimension d = k.dim();
  const auto o = flow_options(cfg.raw);

  std::vector<SphereFunction> initial;
  if (o.initial) {
    initial.push_back(initial_from_json(d, *o.initial));
  } else {
    for (std::size_t i = 0; i < o.runs; ++i)
      initial.push_back(sample_function(d, o.sampler, task_seed(cfg.seed, "flow", i)));
  }
  std::optional<FlowGenerator> gen;
  if (o.heat) {
    gen = HeatFlow{};
  } else {
    int L = 2;
    for (const auto& F : initial) L = std::max(L, F.band_limit());
    gen = cache.get(k, cfg.spectrum_L.value_or(L), cfg.quadrature_order);
  }

  CommandResult res;
  Json runs = Json::array();
  bool all_ok = true;
  for (std::size_t i = 0; i < initial.size(); ++i) {
    const auto run = evolve(*gen, initial[i], o.times, o.entropy);
    bool monotone = true;
    for (std::size_t t = 1; t < run.fisher_series.size(); ++t)
      if (run.fisher_series[t] > run.fisher_series[t - 1] + o.slack * run.fisher_series.front()) monotone = false;
    Json entry = to_json(run);
    entry["monotone"] = monotone;
    all_ok = all_ok && monotone;
    if (o.heat) {
      const auto decay = fisher_decay_check(run, d, o.decay_tol);
      entry["decay"] = to_json(decay);
      all_ok = all_ok && decay.holds;
    }
    runs.push_back(entry);
    const std::string csv_name = initial.size() == 1 ? "flow.csv" : "flow_" + std::to_string(i) + ".csv";
    res.files.emplace_back(csv_name, flow_csv(run));
  }
  res.report["generator"] = o.heat ? "heat" : k.id();
  res.report["runs"] = runs;
  res.report["all_monotone_and_decaying"] = all_ok;
  res.exit_code = all_ok ? kOk : kCheckFailed;
  res.summary = std::string(o.heat ? "heat" : k.id()) + " flow over " + std::to_string(initial.size()) +
                " run(s): " + (all_ok ? "Fisher non-increasing" : "Fisher increased or decay bound violated");
  return res;
}

CommandResult cmd_legendre_check(const Config& cfg) {
  const auto o = legendre_options(cfg.raw);
  CommandResult res;
  Json dims = Json::object();
  double worst = -std::numeric_limits<double>::infinity();
  for (int d : o.dims) {
    const auto rep = legendre_inequality_check(Dimension(d), o.l_max, o.grid);
    dims[std::to_string(d)] = to_json(rep);
    worst = std::max(worst, rep.max_violation);
  }
  res.report["l_max"] = o.l_max;
  res.report["grid"] = o.grid;
  res.report["dims"] = dims;
  res.report["max_violation"] = json_number(worst);
  res.report["passes"] = worst <= 1e-12;
  res.exit_code = worst <= 1e-12 ? kOk : kCheckFailed;
  std::ostringstream os;
  os << "max violation " << worst << (worst <= 1e-12 ? " (pass)" : " (fail)");
  res.summary = os.str();
  return res;
}

CommandResult cmd_compare(const Config& cfg) {
  const KernelSpec& k = require_kernel(cfg);
  const auto o = compare_options(cfg.raw);
  if (!o.reference) throw ConfigError("compare needs compare.reference");
  const auto cmp = compare_kernels(k, *o.reference, o.grid);
  CommandResult res;
  res.report = to_json(cmp);
  res.report["reference"] = kernel_to_json(*o.reference);
  res.report["ratio"] = json_number(cmp.c0 / cmp.C0);
  std::ostringstream os;
  os.precision(10);
  os << k.id() << " vs " << o.reference->id() << ": c0 = " << cmp.c0 << ", C0 = " << cmp.C0;
  res.summary = os.str();
  return res;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Numerical constants and checks for spherical collision operators", "sphkern"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1, 1);
  app.fallthrough();
  std::string config_path, out_dir;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
  app.add_option("--config", config_path, "JSON configuration file (format 1)");
  app.add_option("--out", out_dir, "directory for report files (default: report on stdout)");
  app.add_option("--seed", seed, "master seed, overrides the config");
  app.add_flag("--quiet", quiet, "suppress the summary line");
  app.add_subcommand("analyze", "assemble C_K, C_P and the Lambda_b routes, evaluate the criterion");
  app.add_subcommand("verify", "run the inequality and identity checks on sampled test functions");
  app.add_subcommand("flow", "evolve the heat or B semigroup and record Fisher information");
  app.add_subcommand("legendre-check", "check the even-degree Legendre comparison");
  app.add_subcommand("compare", "extremes of the symmetrized ratio against a reference kernel");

  std::vector<std::string> argv_store{"sphkern"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_store) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigError;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  Config cfg;
  try {
    if (!config_path.empty()) {
      cfg = load_config(config_path);
    } else if (command == "legendre-check") {
      cfg = parse_config(Json{{"format", kFormatVersion}});
    } else {
      throw ConfigError(command + " needs --config");
    }
    if (seed) cfg.seed = *seed;
  } catch (const Error& e) {
    err << "sphkern: config error: " << e.what() << "\n";
    return kConfigError;
  }

  SpectrumCache cache = SpectrumCache::from_environment();
  CommandResult res;
  try {
    if (command == "analyze") res = cmd_analyze(cfg, cache);
    else if (command == "verify") res = cmd_verify(cfg, cache);
    else if (command == "flow") res = cmd_flow(cfg, cache);
    else if (command == "legendre-check") res = cmd_legendre_check(cfg);
    else res = cmd_compare(cfg);
  } catch (const ConfigError& e) {
    err << "sphkern: config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const DivergentIntegral& e) {
    err << "sphkern: " << e.what() << "\n";
    return kDivergent;
  } catch (const NoRouteApplicable& e) {
    err << "sphkern: " << e.what() << "\n";
    return kDivergent;
  } catch (const UnboundedRatio& e) {
    err << "sphkern: " << e.what() << "\n";
    return kDivergent;
  } catch (const Error& e) {
    err << "sphkern: " << e.what() << "\n";
    return kCheckFailed;
  }

  Json doc;
  doc["format"] = kFormatVersion;
  doc["command"] = command;
  doc["seed"] = cfg.seed;
  doc["kernel"] = cfg.kernel ? kernel_to_json(*cfg.kernel) : Json(nullptr);
  doc["result"] = res.report;
  doc["exit_code"] = res.exit_code;
  doc["metadata"] = Json{{"tool", "sphkern"}, {"version", kVersion}};
  const std::string text = doc.dump(2) + "\n";
  try {
    if (!out_dir.empty()) {
      const std::filesystem::path dir(out_dir);
      write_atomic(dir / (command + ".json"), text);
      for (const auto& [name, content] : res.files) write_atomic(dir / name, content);
    } else {
      out << text;
    }
  } catch (const std::exception& e) {
    err << "sphkern: cannot write output: " << e.what() << "\n";
    return kCheckFailed;
  }
  if (!quiet) err << with_command(res.summary, command) << "\n";
  return res.exit_code;
}

}  // namespace sphkern::cli
