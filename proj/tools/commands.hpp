#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace tailored::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kUsageError = 2,
  kDataError = 3,
  kSamplerError = 4,
  kIoError = 5,
  kRecalibrationError = 6,
};

/// Runs one CLI invocation. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Flat `key = value` file; `#` starts a comment.
std::map<std::string, std::string> read_config_file(const std::string& path);

/// Removes `--config FILE` from `args` and appends `--key=value` for every
/// file entry whose flag is not already on the command line.
std::vector<std::string> merge_config(const std::vector<std::string>& args);

/// "a:b:step" sweeps (inclusive) or comma-separated lists.
std::vector<double> parse_number_list(const std::string& text);

}  // namespace tailored::cli
