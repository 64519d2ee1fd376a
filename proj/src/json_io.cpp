#include "sphkern/json_io.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>

#include "sphkern/errors.hpp"

namespace sphkern {

Json json_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return x;
}

double number_from_json(const Json& j, const std::string& where) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  }
  throw ConfigError(where + " must be a number");
}

std::string hexfloat(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", x);
  return buf;
}

double parse_hexfloat(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') throw ConfigError("malformed hexfloat '" + s + "'");
  return v;
}

void reject_unknown(const Json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError("unknown field '" + key + "' in " + where);
  }
}

namespace {

double get_number(const Json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw ConfigError(where + " needs '" + key + "'");
  return number_from_json(j.at(key), where + "." + key);
}

double get_number(const Json& j, const char* key, const std::string& where, double fallback) {
  return j.contains(key) ? number_from_json(j.at(key), where + "." + key) : fallback;
}

std::vector<double> get_vector(const Json& j, const char* key, const std::string& where) {
  if (!j.contains(key) || !j.at(key).is_array()) throw ConfigError(where + " needs an array '" + key + "'");
  std::vector<double> v;
  for (const auto& x : j.at(key)) v.push_back(number_from_json(x, where + "." + key));
  return v;
}

Json vector_json(const std::vector<double>& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(json_number(x));
  return a;
}

WeightSpec weight_from_json(const Json& j) {
  const std::string where = "kernel.params.weight";
  if (!j.is_object() || !j.contains("kind") || !j.at("kind").is_string())
    throw ConfigError(where + " needs a string 'kind'");
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "constant_on_interval") {
    reject_unknown(j, {"kind", "height", "t_min", "t_max"}, where);
    return WeightSpec(ConstantOnInterval{get_number(j, "height", where), get_number(j, "t_min", where),
                                         get_number(j, "t_max", where)});
  }
  if (kind == "exponential") {
    reject_unknown(j, {"kind", "rate", "scale"}, where);
    return WeightSpec(ExponentialWeight{get_number(j, "rate", where), get_number(j, "scale", where)});
  }
  if (kind == "tabulated") {
    reject_unknown(j, {"kind", "t", "omega"}, where);
    return WeightSpec(TabulatedWeight{get_vector(j, "t", where), get_vector(j, "omega", where)});
  }
  throw ConfigError("unknown weight kind '" + kind + "'");
}

Json weight_to_json(const WeightSpec& w) {
  Json j;
  j["kind"] = w.name();
  std::visit(
      [&j](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, ConstantOnInterval>) {
          j["height"] = json_number(v.height);
          j["t_min"] = json_number(v.t_min);
          j["t_max"] = json_number(v.t_max);
        } else if constexpr (std::is_same_v<T, ExponentialWeight>) {
          j["rate"] = json_number(v.rate);
          j["scale"] = json_number(v.scale);
        } else {
          j["t"] = vector_json(v.t);
          j["omega"] = vector_json(v.omega);
        }
      },
      w.variant());
  return j;
}

}  // namespace

KernelSpec kernel_from_json(const Json& j) {
  reject_unknown(j, {"d", "variant", "params"}, "kernel");
  if (!j.contains("d") || !j.at("d").is_number_integer()) throw ConfigError("kernel needs an integer 'd'");
  if (!j.contains("variant") || !j.at("variant").is_string()) throw ConfigError("kernel needs a string 'variant'");
  const Dimension d(j.at("d").get<int>());
  const auto variant = j.at("variant").get<std::string>();
  const Json params = j.value("params", Json::object());
  const std::string where = "kernel.params";
  if (variant == "hard_sphere") {
    reject_unknown(params, {}, where);
    return KernelSpec(d, HardSphere{});
  }
  if (variant == "power_law") {
    reject_unknown(params, {"s", "gamma", "q"}, where);
    if (params.contains("q")) {
      if (params.contains("s") || params.contains("gamma"))
        throw ConfigError("power_law takes either 'q' or 's'/'gamma', not both");
      const auto p = power_law_params(get_number(params, "q", where), d);
      return KernelSpec(d, PowerLaw{p.s, p.gamma});
    }
    const double s = get_number(params, "s", where);
    return KernelSpec(d, PowerLaw{s, get_number(params, "gamma", where, 1.0 - 4.0 * s)});
  }
  if (variant == "constant") {
    reject_unknown(params, {"value"}, where);
    return KernelSpec(d, ConstantKernel{get_number(params, "value", where, 1.0)});
  }
  if (variant == "subordinated") {
    reject_unknown(params, {"weight"}, where);
    if (!params.contains("weight")) throw ConfigError("subordinated kernel needs a 'weight'");
    return KernelSpec(d, SubordinatedKernel{weight_from_json(params.at("weight"))});
  }
  if (variant == "tabulated") {
    reject_unknown(params, {"c", "values", "exp_plus", "exp_minus"}, where);
    return KernelSpec(d, TabulatedKernel{get_vector(params, "c", where), get_vector(params, "values", where),
                                         get_number(params, "exp_plus", where, 0.0),
                                         get_number(params, "exp_minus", where, 0.0)});
  }
  throw ConfigError("unknown kernel variant '" + variant + "'");
}

Json kernel_to_json(const KernelSpec& k) {
  Json j;
  j["d"] = k.dim().value();
  j["variant"] = k.name();
  Json p = Json::object();
  std::visit(
      [&p](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, PowerLaw>) {
          p["s"] = json_number(v.s);
          p["gamma"] = json_number(v.gamma);
        } else if constexpr (std::is_same_v<T, ConstantKernel>) {
          p["value"] = json_number(v.value);
        } else if constexpr (std::is_same_v<T, SubordinatedKernel>) {
          p["weight"] = weight_to_json(v.weight);
        } else if constexpr (std::is_same_v<T, TabulatedKernel>) {
          p["c"] = vector_json(v.c);
          p["values"] = vector_json(v.values);
          p["exp_plus"] = json_number(v.exp_plus);
          p["exp_minus"] = json_number(v.exp_minus);
        }
      },
      k.variant());
  j["params"] = p;
  return j;
}

std::uint64_t fingerprint(const KernelSpec& k) {
  const std::string s = kernel_to_json(k).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string fingerprint_hex(const KernelSpec& k) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, fingerprint(k));
  return buf;
}

AlphaSpec alpha_from_json(const Json& j) {
  const std::string where = "alpha";
  if (!j.is_object() || !j.contains("kind") || !j.at("kind").is_string())
    throw ConfigError("alpha needs a string 'kind'");
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "power") {
    reject_unknown(j, {"kind", "gamma"}, where);
    return PowerAlpha{get_number(j, "gamma", where)};
  }
  if (kind == "tabulated") {
    reject_unknown(j, {"kind", "r", "alpha", "dalpha"}, where);
    return TabulatedAlpha{get_vector(j, "r", where), get_vector(j, "alpha", where), get_vector(j, "dalpha", where)};
  }
  throw ConfigError("unknown alpha kind '" + kind + "'");
}

Json to_json(const KernelSpectrum& s) {
  Json j;
  j["kernel_id"] = s.kernel_id;
  j["d"] = s.d.value();
  j["L"] = s.max_degree();
  j["quadrature_order"] = s.quadrature_order;
  j["values"] = vector_json(s.values);
  return j;
}

Json to_json(const KernelComparison& c) { return Json{{"c0", json_number(c.c0)}, {"C0", json_number(c.C0)}}; }

Json to_json(const CriterionVerdict& v) {
  return Json{{"alpha", v.alpha_description},
              {"sup_quantity", json_number(v.sup_quantity)},
              {"threshold", json_number(v.threshold)},
              {"passes", v.passes}};
}

Json to_json(const ConstantsReport& r) {
  Json j;
  j["d"] = r.d;
  j["kernel_id"] = r.kernel_id;
  j["levy_moment"] = json_number(r.levy_moment);
  j["lambda_delta"] = json_number(r.lambda_delta);
  auto opt = [](const std::optional<double>& v) { return v ? json_number(*v) : Json(nullptr); };
  j["c_K_curvature"] = opt(r.c_K_curvature);
  j["c_K_subordinated"] = opt(r.c_K_subordinated);
  j["c_P_zonal"] = json_number(r.c_P_zonal);
  j["c_P_spectral"] = opt(r.c_P_spectral);
  j["c_P_subordinated"] = opt(r.c_P_subordinated);
  Json routes = Json::object();
  for (const auto& [name, v] : r.lambda_b_routes)
    routes[name] = Json{{"lambda_b", json_number(v)}, {"provenance", r.route_provenance.at(name)}};
  j["routes"] = routes;
  j["comparison"] = r.comparison ? to_json(*r.comparison) : Json(nullptr);
  j["lambda_b"] = json_number(r.lambda_b);
  j["criterion"] = r.criterion ? to_json(*r.criterion) : Json(nullptr);
  j["notes"] = r.notes;
  return j;
}

Json to_json(const InequalityReport& r) {
  Json j{{"lhs", json_number(r.lhs)},
         {"rhs", json_number(r.rhs)},
         {"ratio", json_number(r.ratio)},
         {"bound_used", json_number(r.bound_used)},
         {"margin", json_number(r.margin)},
         {"resolution", r.resolution}};
  if (!std::isnan(r.rhs_check)) j["rhs_check"] = json_number(r.rhs_check);
  return j;
}

Json to_json(const EmpiricalReport& r) {
  return Json{{"min_ratio", json_number(r.min_ratio)},
              {"argmin", r.argmin},
              {"argmin_seed", r.argmin_seed},
              {"samples", r.samples},
              {"redraws", r.redraws}};
}

Json to_json(const LegendreReport& r) {
  return Json{{"max_violation", json_number(r.max_violation)},
              {"worst_l", r.worst_l},
              {"worst_c", json_number(r.worst_c)}};
}

Json to_json(const DecayReport& r) {
  return Json{{"lambda_delta", json_number(r.lambda_delta)},
              {"tol", json_number(r.tol)},
              {"holds", r.holds},
              {"violations", r.violations},
              {"worst_excess", json_number(r.worst_excess)},
              {"worst_time", json_number(r.worst_time)}};
}

Json to_json(const FlowRun& r) {
  Json j;
  j["kernel_id"] = r.kernel_id;
  j["times"] = vector_json(r.times);
  j["fisher"] = vector_json(r.fisher_series);
  j["mass"] = vector_json(r.mass_series);
  j["entropy"] = vector_json(r.entropy_series);
  return j;
}

std::string flow_csv(const FlowRun& r) {
  std::string out = "t,fisher,mass,entropy\n";
  char buf[128];
  for (std::size_t i = 0; i < r.times.size(); ++i) {
    const double e = i < r.entropy_series.size() ? r.entropy_series[i] : std::numeric_limits<double>::quiet_NaN();
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", r.times[i], r.fisher_series[i], r.mass_series[i], e);
    out += buf;
  }
  return out;
}

}  // namespace sphkern
