#pragma once

#include <iosfwd>

namespace oce::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

/// Entry point of the `oce` tool. Output and diagnostics go to the given
/// streams so tests can run it in-process.
int run(int argc, const char *const *argv, std::ostream &out, std::ostream &err);

} // namespace oce::cli
