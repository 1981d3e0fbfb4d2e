#pragma once

#include <iosfwd>

namespace anett::cli {

// Entry point of the `anett` tool; returns the process exit code.
int run(int argc, char** argv);
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace anett::cli
