#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace salam::cli {

// Runs one command line (args[0] is the program name). Exit codes: 0 ok,
// 1 validation error, 2 backend or I/O failure.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace salam::cli
