#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace commuteflow::cli {

inline constexpr std::string_view kVersion = "0.1.0";

/// Lowercase hex SHA-256 of a byte string or of a file's contents.
std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::string& path);

/// Runs one subcommand. `args` excludes the program name. Returns the exit
/// code: 0 on success, non-zero on a fatal error (reported on `err`).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace commuteflow::cli
