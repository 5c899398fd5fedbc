#pragma once

#include <string>

namespace drpets {

/// Shortest-safe decimal for a double: 17 significant digits, round-trips exactly.
std::string format_double(double v);

/// Strict parse of a full token; throws InvalidInput on trailing garbage.
double parse_double(const std::string& token);

std::string read_file(const std::string& path);
/// Throws IoError if the file cannot be written.
void write_file(const std::string& path, const std::string& contents);

}  // namespace drpets
