//===- cli.h -- Command-line driver -----------------------------------------//

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace supa {

/// Exit codes: 0 success, 1 input or query diagnostics, 2 bad usage.
int runCli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

} // namespace supa
