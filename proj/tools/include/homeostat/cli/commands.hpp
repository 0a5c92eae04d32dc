#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace homeostat::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitInvalidConfig = 2,
  kExitEngineFailure = 3,
  kExitGateFailure = 4,
};

struct Options {
  std::filesystem::path config;
  std::optional<std::filesystem::path> out;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> engines;
  unsigned threads = 0;  // 0 = HOMEOSTAT_THREADS, then hardware concurrency

  std::optional<std::string> depths;  // sweep: "first:last"

  std::filesystem::path reference;    // compare
  std::filesystem::path candidate;
  std::optional<std::filesystem::path> candidate_se;
  double k = 2.0;
  double fraction = 0.95;
  double relative_tolerance = 1e-4;   // compare without standard errors
};

int cmd_validate(const Options& options, std::ostream& out, std::ostream& err);
int cmd_run(const Options& options, std::ostream& out, std::ostream& err);
int cmd_sweep(const Options& options, std::ostream& out, std::ostream& err);
int cmd_compare(const Options& options, std::ostream& out, std::ostream& err);

// Parses argv and dispatches to a subcommand.
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace homeostat::cli
