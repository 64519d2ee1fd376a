#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "sphkern/constants.hpp"
#include "sphkern/flow.hpp"
#include "sphkern/gegenbauer.hpp"
#include "sphkern/kernels.hpp"
#include "sphkern/verifier.hpp"

namespace sphkern {

using Json = nlohmann::ordered_json;

/// Version tag carried by every config, report and cache file.
inline constexpr int kFormatVersion = 1;

/// Finite doubles as numbers; inf, -inf and nan as the strings "inf", "-inf", "nan".
Json json_number(double x);
/// Inverse of json_number. Throws ConfigError for anything else.
double number_from_json(const Json& j, const std::string& where);

/// Exact text form of a double ("%a"), used where bit-identity matters.
std::string hexfloat(double x);
double parse_hexfloat(const std::string& s);

/// Throws ConfigError naming the first key of `j` not in `allowed`.
void reject_unknown(const Json& j, std::initializer_list<const char*> allowed, const std::string& where);

/// Kernel JSON: {"d": int, "variant": name, "params": {...}}.
///   hard_sphere   {}
///   power_law     {"s": s, "gamma": g} (gamma defaults to 1 - 4s) or {"q": q}
///   constant      {"value": v}
///   subordinated  {"weight": {"kind": "constant_on_interval", "height", "t_min", "t_max"}
///                          | {"kind": "exponential", "rate", "scale"}
///                          | {"kind": "tabulated", "t": [...], "omega": [...]}}
///   tabulated     {"c": [...], "values": [...], "exp_plus": p, "exp_minus": q}
/// Throws ConfigError on schema violations and DomainError from the kernel
/// constructors.
KernelSpec kernel_from_json(const Json& j);

/// Canonical serialization: fixed key order, power laws always as (s, gamma).
Json kernel_to_json(const KernelSpec& k);

/// 64-bit FNV-1a of the canonical kernel serialization.
std::uint64_t fingerprint(const KernelSpec& k);
std::string fingerprint_hex(const KernelSpec& k);

/// {"kind": "power", "gamma": g} or {"kind": "tabulated", "r", "alpha", "dalpha"}.
AlphaSpec alpha_from_json(const Json& j);

Json to_json(const KernelSpectrum& s);
Json to_json(const KernelComparison& c);
Json to_json(const CriterionVerdict& v);
Json to_json(const ConstantsReport& r);
Json to_json(const InequalityReport& r);
Json to_json(const EmpiricalReport& r);
Json to_json(const LegendreReport& r);
Json to_json(const DecayReport& r);
Json to_json(const FlowRun& r);

/// CSV with header t,fisher,mass,entropy and 17 significant digits.
std::string flow_csv(const FlowRun& r);

}  // namespace sphkern
