#pragma once

#include <iosfwd>
#include <vector>

#include "dynborrow/config.hpp"
#include "dynborrow/report.hpp"

namespace dynborrow {

/// Exit codes of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 2,
  kExitNumeric = 3,
  kExitInfeasible = 4,
};

Report cmd_posterior(const RunConfig& cfg, double y_star);
Report cmd_oc(const RunConfig& cfg);
/// Report's "feasible" summary entry is false when any requested parameter
/// has no grid point meeting the type I error target.
Report cmd_calibrate(const RunConfig& cfg);
Report cmd_ess_hist(const RunConfig& cfg, const std::vector<double>& y_star);
Report cmd_validate(const RunConfig& cfg);

/// Full command-line entry point; returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace dynborrow
