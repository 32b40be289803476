#include "bvm/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "bvm/error.hpp"

namespace bvm {

namespace {

std::string quote(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

void write_row(const std::vector<std::string>& row, std::ostream& out) {
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) out << ',';
    out << quote(row[i]);
  }
  out << "\r\n";
}

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

std::string format_bool(bool v) { return v ? "1" : "0"; }

void write_csv(const CsvTable& table, std::ostream& out) {
  if (table.rows.empty()) throw ConfigError("emit_csv: no records to write");
  if (table.header.empty()) throw ConfigError("emit_csv: empty header");
  for (const auto& row : table.rows)
    if (row.size() != table.header.size()) throw ConfigError("emit_csv: row width differs from header");
  for (const auto& [k, v] : table.metadata) out << "# " << k << '=' << v << "\r\n";
  write_row(table.header, out);
  for (const auto& row : table.rows) write_row(row, out);
}

void emit_csv(const CsvTable& table, const std::string& path) {
  std::ostringstream body;
  write_csv(table, body);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << body.str();
  out.flush();
  if (!out) throw IoError("write to '" + path + "' failed");
}

CsvTable parse_csv(const std::string& text) {
  CsvTable table;
  std::istringstream in(text);
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!have_header && line.rfind("# ", 0) == 0) {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      table.metadata.emplace_back(line.substr(2, eq - 2), line.substr(eq + 1));
      continue;
    }
    if (line.empty()) continue;
    if (!have_header) {
      table.header = split_row(line);
      have_header = true;
    } else {
      table.rows.push_back(split_row(line));
    }
  }
  return table;
}

}  // namespace bvm
