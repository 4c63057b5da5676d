#pragma once

#include <ostream>

namespace ordnmf::cli {

// Output schema version written into every file the CLI produces.
inline constexpr int kSchemaVersion = 1;

// Entry point shared by the executable and the tests. Returns the process
// exit code; nothing is written to disk unless the command succeeds.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ordnmf::cli
