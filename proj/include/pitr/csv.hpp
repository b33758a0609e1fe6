#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace pitr {

/// In-memory CSV: header row plus data rows of string cells.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::optional<std::size_t> column_index(const std::string& name) const;
};

/// Reads a comma-separated UTF-8 file with a mandatory header row. Handles
/// quoted fields (embedded commas, doubled quotes) and CRLF line endings.
/// Rows whose width differs from the header are an error.
CsvTable read_csv(const std::string& path);

void write_csv(const std::string& path, const CsvTable& table);

/// Shortest decimal representation that round-trips the double exactly.
std::string format_double(double value);

/// Strict full-string parse; ok=false on failure (after trimming spaces).
double parse_double(const std::string& cell, bool& ok);

/// Empty cells and the usual NA spellings count as missing.
bool is_missing_cell(const std::string& cell);

}  // namespace pitr
