#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "cubegraph/kvconfig.hpp"

namespace cubegraph {

// Every recognised config key with its default.
KeyValueConfig default_run_config();

// Runs one subcommand; args excludes the program name. Returns the process
// exit status: 0 on success, 1 on a module error, 2 on a usage error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cubegraph
