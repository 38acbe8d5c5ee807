#pragma once

#include <string>
#include <vector>

namespace poip {

/// Entry point of the `poip` tool; args exclude the program name. Returns 0
/// on success, 1 on a domain failure (bad file, infeasible configuration,
/// solver refusal), 2 on a usage error.
int run_cli(const std::vector<std::string>& args);

}  // namespace poip
