#pragma once

#include <string>
#include <vector>

namespace hhr {

// Entry point behind the `hhr` binary. `args` excludes the program name.
// Returns 0 on success, 1 on validation errors (single-line diagnostic on
// stderr), 2 on internal failure.
int run_cli(const std::vector<std::string>& args);

}  // namespace hhr
