#pragma once

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "pyrocast/errors.hpp"

namespace pyrocast {

// Shortest round-trippable decimal form of a double ("%.17g" trimmed), so CSV
// output is byte-stable and parses back to the identical value.
std::string format_double(double x);

std::vector<std::string> split_csv_line(const std::string& line);

// Reads a whole CSV: first row is the header, remaining rows must all have the
// same arity. Empty trailing lines ignored.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Column index by name; throws data_error if absent.
  std::size_t column(const std::string& name) const;
};

CsvTable read_csv(const std::filesystem::path& path);

double parse_double(const std::string& field, const std::string& context);
long parse_long(const std::string& field, const std::string& context);

// Writes text to path atomically enough for tests (truncate + write).
void write_text_file(const std::filesystem::path& path, const std::string& body);

}  // namespace pyrocast
