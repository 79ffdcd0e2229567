#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace numbra::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDomain = 1;
inline constexpr int kExitIo = 2;
inline constexpr int kExitUsage = 64;

/// Runs one subcommand. `args` excludes the program name. Reports go to
/// `out` (or to the --out file), diagnostics and usage to `err`.
/// Returns 0 on success, 1 on domain errors, 2 on I/O errors, 64 on usage
/// errors.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace numbra::cli
