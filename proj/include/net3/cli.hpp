#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace net3::cli {

/// Runs one command line (args[0] is the program name). Metrics go to `out`
/// as one JSON line, diagnostics to `err`. Returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace net3::cli
