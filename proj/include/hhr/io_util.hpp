#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace hhr {

// Shortest decimal string that round-trips to the same double.
std::string format_double(double v);

// Strict double parse; the whole token must be consumed.
double parse_double(const std::string& token, const std::string& context);

// Strict non-negative integer parse.
long parse_long(const std::string& token, const std::string& context);

std::vector<std::string> split(const std::string& line, char sep);

// Writes to a sibling temp file, then renames over the target so readers
// never observe a partially written file.
void atomic_write_file(const std::filesystem::path& path,
                       const std::string& content);

std::string read_file(const std::filesystem::path& path);

}  // namespace hhr
