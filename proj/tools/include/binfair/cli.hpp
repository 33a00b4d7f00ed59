#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace binfair::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

/// Schema version of every JSON and JSON-lines artifact the CLI writes.
inline constexpr int kArtifactSchemaVersion = 1;

/// Parses `args` (without the program name) and runs one command. The
/// one-line summary goes to `out`; usage and error messages go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// argv entry point used by the binfair executable.
int run(int argc, const char* const* argv);

}  // namespace binfair::cli
