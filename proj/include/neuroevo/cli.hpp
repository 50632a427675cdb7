#pragma once

#include <ostream>

namespace neuroevo::cli {

// Exit codes shared by every command.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitTargetMissed = 3;
inline constexpr int kExitEvaluation = 4;

// Entry point of the `neuroevo` tool. Regular output goes to `out`,
// diagnostics and log lines to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace neuroevo::cli
