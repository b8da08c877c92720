#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace lidkit::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitAssert = 2;

/// Runs one lidkit command line. Diagnostics go to `err`; data goes to the
/// files named by --out, or to `out` when --out is omitted or "-".
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace lidkit::cli
