#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gridcascade::cli {

enum ExitCode : int { ok = 0, failure = 1, usage = 2 };

/// Entry point for the gridcascade tool. `args` excludes the program name.
int main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gridcascade::cli
