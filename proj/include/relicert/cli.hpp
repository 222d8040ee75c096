#pragma once
// Command-line driver. Exit codes: 0 success, 1 validation/usage error,
// 2 backend or I/O failure. Kept as a library entry so tests can drive the
// exact argv path the binary uses.

#include <string>
#include <vector>

namespace relicert {

int run_cli(const std::vector<std::string>& args);

}  // namespace relicert
