#pragma once

// Runs the command-line binary (path baked in at build time) and reports its
// exit status.

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace ppwgan::testing {

struct CliResult {
  int code = -1;
  std::string output;  // stdout and stderr interleaved
};

/// `env` is prepended to the command line, e.g. "PPWGAN_THREADS=2".
inline CliResult run_cli(const std::string& args, const std::filesystem::path& scratch,
                         const std::string& env = {}) {
  const auto log = scratch / "cli_output.txt";
  const std::string cmd = env + (env.empty() ? "" : " ") + PPWGAN_CLI_PATH + " " + args +
                          " > '" + log.string() + "' 2>&1";
  const int status = std::system(cmd.c_str());
  CliResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(log);
  std::stringstream ss;
  ss << in.rdbuf();
  r.output = ss.str();
  return r;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

}  // namespace ppwgan::testing
