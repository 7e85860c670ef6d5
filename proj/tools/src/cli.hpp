#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace scone::cli {

// Runs one `scone` command. Returns the process exit code: 0 on success,
// 2 on usage errors (bad flags, missing input files), 1 on runtime errors.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace scone::cli
