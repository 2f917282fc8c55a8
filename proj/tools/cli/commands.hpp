#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace kgcp::cli {

/// Process exit codes. Stable: scripts depend on them.
enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitConfig = 2,
  kExitDiverged = 3,
  kExitEmptyCalibration = 4,
  kExitUnknownName = 5,
  kExitCheckpoint = 6,
};

/// Entry point shared by the binary and the tests. Data goes to `out`,
/// diagnostics to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

std::size_t edit_distance(std::string_view a, std::string_view b);

/// Up to `n` dictionary entries closest to `name` by edit distance, ties in
/// dictionary order.
std::vector<std::string> nearest_names(std::string_view name, const std::vector<std::string>& dictionary,
                                       std::size_t n = 3);

}  // namespace kgcp::cli
