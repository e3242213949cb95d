#pragma once

#include "cli/config.hpp"

#include <iosfwd>
#include <string>

namespace bsqz::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;

/// compress | solve | eval | diagnose | report. Each command runs the stages it depends on
/// and writes their artifacts too. Returns the process exit code.
int run_command(const std::string& command, const ExperimentConfig& cfg, std::ostream& log);

/// Output directory: cfg.out, else $BSQZ_OUT, else "bsqz-out".
std::string output_dir(const ExperimentConfig& cfg);

/// Full command line handling (config file, overrides, flags).
int run_cli(int argc, char** argv);

}  // namespace bsqz::cli
