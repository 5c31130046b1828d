#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace skinelev {

// Minimal RFC 4180 table: first row is the header. Quoted fields may contain
// commas, doubled quotes and newlines.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<int> row_lines;  // 1-based source line of each row, for error messages

  // Index of `column` in the header, or -1.
  int column(std::string_view name) const;
};

CsvTable parse_csv(std::string_view text, const std::string& origin);
CsvTable read_csv(const std::filesystem::path& path);

std::string csv_escape(std::string_view field);
std::string csv_row(const std::vector<std::string>& fields);

// Writes `contents` to `path` through a temporary sibling and a rename, so a
// crashed writer never leaves a truncated file behind.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);
std::string read_file(const std::filesystem::path& path);

}  // namespace skinelev
