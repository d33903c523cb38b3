#pragma once

#include <string>
#include <vector>

namespace flare::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

/// Runs one `flaretk` invocation. `args` excludes the program name.
/// Returns 0 on success, 1 on usage errors and 2 on runtime errors.
int dispatch(const std::vector<std::string>& args);
int dispatch(int argc, char** argv);

}  // namespace flare::cli
