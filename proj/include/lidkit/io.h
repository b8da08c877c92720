#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace lidkit {

// Shortest decimal text that parses back to the identical double.
std::string format_double(double value);
std::string format_optional(const std::optional<double>& value);

// Header-first CSV without quoting (none of our formats need it).
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const;
  std::optional<std::size_t> find_column(const std::string& name) const;
};

CsvTable parse_csv(std::istream& in);
CsvTable read_csv(const std::filesystem::path& path);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace lidkit
