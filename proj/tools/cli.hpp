#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mdm::cli {

enum ExitCode { kOk = 0, kUsage = 1, kIo = 2, kData = 3 };

/// Runs the tool with argv-style arguments (args[0] is the program name).
/// Results go to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mdm::cli
