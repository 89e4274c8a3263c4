#pragma once

#include <filesystem>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace ccs::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kValidationError = 1;
inline constexpr int kRuntimeFailure = 2;

// Verbs: gen-data, train, eval, assemble, gradcheck, bench-scaling, grid.
// `args` excludes the program name. Results go under a fresh run directory
// below $CCS_RUN_DIR (default "runs"), named <UTC timestamp>-seed<seed>.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Creates <base>/<YYYYmmdd-HHMMSS>-seed<seed>, adding a numeric suffix when
// the name is taken.
std::filesystem::path make_run_dir(const std::filesystem::path& base, std::uint64_t seed);

}  // namespace ccs::cli
