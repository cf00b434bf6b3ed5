#pragma once

// Command-line front end. Every subcommand produces a table that is written
// as CSV with '#' header lines or as JSON; both embed the run configuration
// so a file can be fed back through --config to reproduce it.
//
// Settings are resolved as: explicit flags, then the --config file, then
// the defaults below.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace sglm::cli {

inline constexpr const char* kVersion = "sglm 0.1.0";

struct RunConfig {
  std::string command;
  std::string prior = "bernoulli";
  std::vector<std::string> activation;  // empty: subcommand default
  std::vector<double> delta;            // empty: subcommand default
  double delta_min = 0.0;
  double delta_max = 4.0;
  int delta_steps = 0;  // > 0 replaces the delta list by a uniform grid
  double gamma_min = 0.1;
  double gamma_max = 3.0;
  int gamma_steps = 30;
  bool gamma_relative = false;  // gamma grid is in units of gamma_c
  std::vector<std::string> rho{"limit"};
  int order = 128;
  std::uint64_t seed = 0;
  int seeds = 10;
  int n = 2000;
  int iters = 200;
  double damping = 0.7;
  double tol = 1e-8;
  int n_test = 0;
  std::string format = "csv";
};

/// JSON text of the configuration (keys sorted, no whitespace).
std::string config_to_json(const RunConfig& cfg);
/// Accepts a JSON configuration, a JSON output file or a CSV output file.
RunConfig config_from_text(const std::string& text);

/// Runs one configured command and writes its output; returns the exit code
/// (0 success, 1 cell-level failures).
int execute(const RunConfig& cfg, std::ostream& out);

/// Parses argv, runs the command and returns the process exit code
/// (2 for usage or parameter errors).
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace sglm::cli
