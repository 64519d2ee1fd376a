#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "sphkern/kernels.hpp"

namespace sphkern {

/// Writes `content` to `path` through a temporary file in the same directory
/// followed by a rename, so readers never observe a partial file.
void write_atomic(const std::filesystem::path& path, const std::string& content);

/// On-disk store of kernel spectra keyed by (kernel fingerprint, d, L,
/// starting quadrature order). Values are stored as hexfloats, so a hit is
/// bit-identical to recomputation. A disabled cache (no directory) always
/// recomputes.
class SpectrumCache {
 public:
  explicit SpectrumCache(std::optional<std::filesystem::path> dir);

  /// Directory named by the SPHKERN_CACHE_DIR environment variable, if set.
  static SpectrumCache from_environment();

  [[nodiscard]] bool enabled() const noexcept { return dir_.has_value(); }
  [[nodiscard]] std::filesystem::path entry_path(const KernelSpec& k, int L, int start_order) const;

  /// Cached spectrum, or btilde_spectrum(k, L, start_order) stored for next time.
  /// Unreadable or mismatched entries are recomputed and replaced.
  KernelSpectrum get(const KernelSpec& k, int L, int start_order = kDefaultQuadratureOrder);

  [[nodiscard]] std::size_t hits() const noexcept { return hits_; }
  [[nodiscard]] std::size_t misses() const noexcept { return misses_; }

 private:
  std::optional<KernelSpectrum> load(const KernelSpec& k, int L, int start_order) const;

  std::optional<std::filesystem::path> dir_;
  std::size_t hits_ = 0;
  std::size_t misses_ = 0;
};

}  // namespace sphkern
