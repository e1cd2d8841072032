#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace syncsim {

// Entry point behind the syncsim binary; exposed so tests can drive the CLI
// in-process. Returns the process exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

}  // namespace syncsim
