#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include "config.hpp"

namespace hqf::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitSchema = 2;
inline constexpr int kExitNumerical = 3;

struct RunOptions {
  std::string out_dir;  // empty: HQF_OUT_DIR, then the config's "output", then "hqf_out"
  int jobs = 1;
  std::optional<std::uint64_t> seed;
};

/// Validates `doc`, runs the subcommand and writes its artifacts plus
/// manifest.json. Returns the process exit status; messages go to `err`.
int run(const std::string& subcommand, const nlohmann::json& doc, const RunOptions& opts, std::ostream& err);

/// Same, reading the config from a file.
int run_file(const std::string& subcommand, const std::string& config_path, const RunOptions& opts, std::ostream& err);

}  // namespace hqf::cli
