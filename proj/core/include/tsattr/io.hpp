#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tsattr::io {

// Shortest form is not used; every float is written with 17 significant
// digits so text files round-trip doubles exactly.
std::string format_double(double value);
double parse_double(std::string_view text);
long long parse_int(std::string_view text);

std::vector<std::string_view> split_csv_line(std::string_view line);

std::string read_file(const std::filesystem::path& path);
// Writes via a temporary file and rename, creating parent directories.
void write_file(const std::filesystem::path& path, std::string_view contents);

// Lower-case hex SHA-256.
std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);

// Minimal CSV table reader: header row plus data rows split on commas.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(std::string_view name) const;  // throws if absent
};
CsvTable parse_csv(std::string_view text);

}  // namespace tsattr::io
