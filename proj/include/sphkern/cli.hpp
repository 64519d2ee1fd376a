#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sphkern/cache.hpp"
#include "sphkern/json_io.hpp"

namespace sphkern::cli {

enum ExitCode : int {
  kOk = 0,
  kCriterionFailed = 1,
  kConfigError = 2,
  kDivergent = 3,  ///< divergent kernel, unbounded comparison or no applicable route
  kCheckFailed = 4,
};

/// Parsed configuration file (format 1). Every section is optional; unknown
/// keys are rejected at every level.
struct Config {
  Json raw;
  std::optional<KernelSpec> kernel;
  std::uint64_t seed = 1;
  unsigned threads = 0;
  std::optional<int> spectrum_L;
  int quadrature_order = kDefaultQuadratureOrder;
};

/// Validates top-level structure and every known section. Throws ConfigError
/// (or DomainError from kernel construction) on invalid input.
Config parse_config(const Json& j);
Config load_config(const std::filesystem::path& path);

/// Seed of task `index` under a labeled stream of the master seed.
std::uint64_t task_seed(std::uint64_t master, const std::string& label, std::uint64_t index);

/// Outcome of one subcommand: the JSON report, extra files, and the exit code.
struct CommandResult {
  Json report;
  std::vector<std::pair<std::string, std::string>> files;  ///< (file name, content)
  int exit_code = kOk;
  std::string summary;
};

CommandResult cmd_analyze(const Config& cfg, SpectrumCache& cache);
CommandResult cmd_verify(const Config& cfg, SpectrumCache& cache);
CommandResult cmd_flow(const Config& cfg, SpectrumCache& cache);
CommandResult cmd_legendre_check(const Config& cfg);
CommandResult cmd_compare(const Config& cfg);

/// Full command line: `sphkern <analyze|verify|flow|legendre-check|compare>
/// [--config path] [--out dir] [--seed u64] [--quiet]`. The report goes to
/// <out>/<command>.json, or to `out` when no directory is given; a one-line
/// summary goes to `err` unless --quiet.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sphkern::cli
