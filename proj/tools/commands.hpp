#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace fusion::cli {

/// Full command-line dispatch. Returns the process exit code: 0 ok,
/// 1 usage, 2 data or validation, 3 runtime. Errors are reported on `err`
/// as one JSON object.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fusion::cli
