#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sdb::cli {

// `args` excludes the program name. Returns the process exit code: 0 on
// success, 1 on a failed run, 2 on a usage error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run(int argc, char** argv);

}  // namespace sdb::cli
