#pragma once

#include <stdexcept>
#include <string>

namespace mcnl {

// Invalid configuration values (bad dimensions, margins, schedules, ...).
// The CLI maps this to exit code 2.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Structurally invalid data (SCT violations, missing pair types, shape
// mismatches, unreadable manifests, ...). CLI exit code 3.
struct DataError : std::runtime_error {
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Manifest parse failure; carries the 1-based line number.
struct ParseError : DataError {
  ParseError(const std::string& msg, std::size_t line)
      : DataError("line " + std::to_string(line) + ": " + msg), line_number(line) {}
  std::size_t line_number;
};

}  // namespace mcnl
