#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace qosgp {

// Numeric CSV: comma separated, dot decimal, mandatory header, no quoting.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  // Index of a named column, or -1.
  int column(const std::string& name) const;
};

CsvTable parse_csv(const std::string& text, const std::string& source = "<csv>");
CsvTable read_csv(const std::filesystem::path& path);
std::string format_csv(const CsvTable& table);

// Shortest representation that round-trips to the same double.
std::string format_double(double value);

// Writes to a sibling temporary file and renames it over the target.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);
std::string read_file(const std::filesystem::path& path);

}  // namespace qosgp
