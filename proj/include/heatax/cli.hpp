#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace heatax {

/// Runs one `heatax` invocation; `args` excludes the program name. Returns
/// the process exit code. Errors are reported on `err` as one line of the
/// form `heatax: error[<code>]: <message>`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Reads a flat key=value file ('#' starts a comment) into `--key=value`
/// arguments.
std::vector<std::string> config_file_args(const std::string& path);

}  // namespace heatax
