#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "dctdet/error.hpp"

namespace dctdet::cli {

// 0 success, 1 usage, 2 input or parse error, 3 unsupported feature.
int exit_code(ErrorKind kind);

// Runs `dctdet <args...>`; args excludes the program name. Reports go to
// out, diagnostics to err.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dctdet::cli
