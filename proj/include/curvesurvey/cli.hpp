#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace curvesurvey {

// Entry point of the `curvesurvey` tool. Subcommands: generate, stratify,
// allocate, estimate, experiment. Returns the process exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace curvesurvey
