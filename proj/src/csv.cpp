#include "pitr/csv.hpp"

#include <cerrno>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "pitr/common.hpp"

namespace pitr {

std::optional<std::size_t> CsvTable::column_index(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  return std::nullopt;
}

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return s.substr(b, e - b);
}

// Splits one physical line; quoted fields may not span lines (none of the
// supported formats need multi-line cells).
std::vector<std::string> split_line(const std::string& line, std::size_t line_no) {
  std::vector<std::string> cells;
  std::string cell;
  bool in_quotes = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cell.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        cell.push_back(c);
      }
    } else if (c == '"') {
      in_quotes = true;
    } else if (c == ',') {
      cells.push_back(trim(cell));
      cell.clear();
    } else {
      cell.push_back(c);
    }
  }
  if (in_quotes)
    throw ValidationError("unterminated quote on line " + std::to_string(line_no));
  cells.push_back(trim(cell));
  return cells;
}

bool needs_quoting(const std::string& cell) {
  return cell.find_first_of(",\"\n") != std::string::npos;
}

void write_cell(std::ostream& out, const std::string& cell) {
  if (!needs_quoting(cell)) {
    out << cell;
    return;
  }
  out << '"';
  for (char c : cell) {
    if (c == '"') out << '"';
    out << c;
  }
  out << '"';
}

}  // namespace

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open CSV file: " + path);
  CsvTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1) {
      table.header = split_line(line, line_no);
      if (table.header.empty() || (table.header.size() == 1 && table.header[0].empty()))
        throw ValidationError("CSV header row is empty: " + path);
      continue;
    }
    if (line.empty() || line == "\r") continue;
    std::vector<std::string> cells = split_line(line, line_no);
    if (cells.size() != table.header.size())
      throw ValidationError(path + ": line " + std::to_string(line_no) + " has " +
                            std::to_string(cells.size()) + " cells, expected " +
                            std::to_string(table.header.size()));
    table.rows.push_back(std::move(cells));
  }
  if (line_no == 0) throw ValidationError("CSV file has no header row: " + path);
  return table;
}

void write_csv(const std::string& path, const CsvTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot open file for writing: " + path);
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    if (i) out << ',';
    write_cell(out, table.header[i]);
  }
  out << '\n';
  for (const std::vector<std::string>& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      write_cell(out, row[i]);
    }
    out << '\n';
  }
  if (!out) throw ValidationError("failed writing file: " + path);
}

std::string format_double(double value) {
  char buf[64];
  const std::to_chars_result res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& cell, bool& ok) {
  const std::string t = trim(cell);
  if (t.empty()) {
    ok = false;
    return 0.0;
  }
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  ok = (end == t.c_str() + t.size()) && errno != ERANGE;
  return v;
}

bool is_missing_cell(const std::string& cell) {
  const std::string t = trim(cell);
  return t.empty() || t == "NA" || t == "na" || t == "NaN" || t == "nan" || t == "NULL" ||
         t == "null";
}

}  // namespace pitr
