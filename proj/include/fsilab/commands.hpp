#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "fsilab/config.hpp"

namespace fsilab {

enum ExitCode : int { kPass = 0, kPropertyFailure = 1, kUsageError = 2, kPreconditionError = 3 };

struct CheckResult {
  std::string name;
  bool pass = false;
  double value = 0;
  double tolerance = 0;
};

struct VerifyOptions {
  bool quick = false;
  bool flip_stencil = false;
};

// Runs the invariant suite of all modules at the configured grid.
std::vector<CheckResult> run_invariant_suite(const RunConfig& cfg, const VerifyOptions& opt);

int cmd_spectrum(const RunConfig& cfg, std::ostream& log);
int cmd_resolvent_sweep(const RunConfig& cfg, std::ostream& log);
int cmd_evolve(const RunConfig& cfg, std::ostream& log, bool violate_x0 = false);
int cmd_verify(const RunConfig& cfg, const VerifyOptions& opt, std::ostream& log);

// Full command-line entry point; maps exceptions onto the exit-code contract.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace fsilab
