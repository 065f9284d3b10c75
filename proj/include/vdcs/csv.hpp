#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace vdcs::csv {

/// Decimal with 17 significant digits; round-trips every finite double.
std::string format_double(double value);
double parse_double(std::string_view text);
long long parse_int(std::string_view text);

std::vector<std::string> split(std::string_view line, char sep = ',');
std::string trim(std::string_view text);

/// Reads a whole file, throwing IoError on failure.
std::string read_file(const std::string& path);
/// Writes a whole file, throwing IoError on failure.
void write_file(const std::string& path, const std::string& contents);

/// Parses a CSV document: first row must equal `header` exactly.
std::vector<std::vector<std::string>> parse_table(const std::string& text,
                                                  const std::string& header);

}  // namespace vdcs::csv
