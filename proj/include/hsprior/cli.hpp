#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace hsprior {

/// Entry point of the `hsprior` tool. `args` excludes the program name.
/// Returns 0 on success, 1 on runtime failures and 2 on usage errors; every
/// failure writes a one-line diagnostic to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hsprior
