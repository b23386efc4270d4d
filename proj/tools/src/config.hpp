#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hqf/grid.hpp"
#include "hqf/metric.hpp"
#include "json.hpp"

namespace hqf::cli {

/// Schema violation. Carries every problem found, one per line.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::vector<std::string>& problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

enum class Subcommand { solve, green, control, separate, jets, density, recover, analyze, convergence };

Subcommand subcommand_from_string(const std::string& s);
std::string to_string(Subcommand s);
const std::vector<std::string>& subcommand_names();

/// Subcommands that draw random controls and therefore need a seed.
bool needs_seed(Subcommand s);

struct MetricSpec {
  std::string preset;  // empty when loaded from a file
  Vec3 diag{1, 1, 1};
  std::string file;    // field-file stem with 6 components g11 g12 g13 g22 g23 g33
};

struct ExperimentConfig {
  Subcommand subcommand = Subcommand::solve;
  DomainSpec domain;
  MetricSpec metric;
  std::vector<int> resolutions;
  std::size_t dictionary_size = 40;
  std::optional<std::uint64_t> seed;
  std::string output_dir;
  nlohmann::json params = nlohmann::json::object();
  /// The validated document, with --seed applied; hashed into the manifest.
  nlohmann::json canonical;
};

/// Validates `doc` for `sub`. Unknown keys and type errors are collected and
/// thrown together as a ConfigError.
ExperimentConfig parse_config(Subcommand sub, const nlohmann::json& doc, std::optional<std::uint64_t> seed_override);

/// Reads a JSON file; parse errors become a ConfigError.
nlohmann::json load_config_file(const std::string& path);

/// Metric on `dom` from the spec (presets are sampled, files are read).
MetricField make_metric(const MetricSpec& m, const DomainPtr& dom);

/// Domain from the spec with the resolution replaced by n on every axis.
DomainSpec with_resolution(DomainSpec d, int n);

}  // namespace hqf::cli
