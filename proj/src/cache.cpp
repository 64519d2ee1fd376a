#include "sphkern/cache.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "sphkern/errors.hpp"
#include "sphkern/json_io.hpp"

namespace sphkern {

namespace fs = std::filesystem;

void write_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw Error("failed writing " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw Error("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

SpectrumCache::SpectrumCache(std::optional<fs::path> dir) : dir_(std::move(dir)) {}

SpectrumCache SpectrumCache::from_environment() {
  const char* env = std::getenv("SPHKERN_CACHE_DIR");
  if (env == nullptr || *env == '\0') return SpectrumCache(std::nullopt);
  return SpectrumCache(fs::path(env));
}

fs::path SpectrumCache::entry_path(const KernelSpec& k, int L, int start_order) const {
  if (!dir_) throw DomainError("spectrum cache is disabled");
  return *dir_ / ("spectrum-" + fingerprint_hex(k) + "-d" + std::to_string(k.dim().value()) + "-L" +
                  std::to_string(L) + "-q" + std::to_string(start_order) + ".json");
}

std::optional<KernelSpectrum> SpectrumCache::load(const KernelSpec& k, int L, int start_order) const {
  std::ifstream in(entry_path(k, L, start_order), std::ios::binary);
  if (!in) return std::nullopt;
  try {
    const Json j = Json::parse(in);
    if (j.at("format") != kFormatVersion || j.at("kernel") != kernel_to_json(k) || j.at("L") != L ||
        j.at("start_order") != start_order)
      return std::nullopt;
    KernelSpectrum s;
    s.d = k.dim();
    s.kernel_id = j.at("kernel_id").get<std::string>();
    s.quadrature_order = j.at("quadrature_order").get<int>();
    s.alpha_exp = parse_hexfloat(j.at("alpha_exp").get<std::string>());
    s.beta_exp = parse_hexfloat(j.at("beta_exp").get<std::string>());
    for (const auto& v : j.at("values")) s.values.push_back(parse_hexfloat(v.get<std::string>()));
    if (s.max_degree() != L) return std::nullopt;
    return s;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

KernelSpectrum SpectrumCache::get(const KernelSpec& k, int L, int start_order) {
  if (dir_) {
    if (auto s = load(k, L, start_order)) {
      ++hits_;
      return *s;
    }
  }
  ++misses_;
  KernelSpectrum s = btilde_spectrum(k, L, start_order);
  if (dir_) {
    Json j;
    j["format"] = kFormatVersion;
    j["fingerprint"] = fingerprint_hex(k);
    j["kernel"] = kernel_to_json(k);
    j["L"] = L;
    j["start_order"] = start_order;
    j["kernel_id"] = s.kernel_id;
    j["quadrature_order"] = s.quadrature_order;
    j["alpha_exp"] = hexfloat(s.alpha_exp);
    j["beta_exp"] = hexfloat(s.beta_exp);
    Json values = Json::array();
    for (double v : s.values) values.push_back(hexfloat(v));
    j["values"] = values;
    write_atomic(entry_path(k, L, start_order), j.dump(1) + "\n");
  }
  return s;
}

}  // namespace sphkern
