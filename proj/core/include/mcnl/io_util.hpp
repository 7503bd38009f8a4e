#pragma once

#include <string>

namespace mcnl {

// Shortest round-trip decimal representation of a double (std::to_chars).
std::string format_double(double v);

// Parses a double; returns false on trailing garbage or empty input.
bool parse_double(const std::string& s, double& out);

// Parses a non-negative integer; returns false unless the whole string is one.
bool parse_nonneg_int(const std::string& s, int& out);

// Writes content to a temporary file in the target directory, then renames it
// over path. Concurrent writers of different paths never interleave output.
void write_file_atomic(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

}  // namespace mcnl
