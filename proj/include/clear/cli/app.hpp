#pragma once

#include <filesystem>
#include <iosfwd>

namespace clear {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Relative dataset paths resolve under $CLEAR_DATA_DIR, or ./data when unset.
std::filesystem::path data_root();
std::filesystem::path resolve_data_path(const std::filesystem::path& p);

/// Full command-line surface. Returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace clear
