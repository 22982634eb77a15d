#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace spde {

/// Runs one CLI invocation. `args` excludes the program name. CSV goes to
/// --out, or to `out` when --out is absent; verdicts and diagnostics go to
/// `err`. Returns 0 on PASS or completion, 1 on a FAIL or inconclusive
/// verdict, 2 on a usage or configuration error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace spde
