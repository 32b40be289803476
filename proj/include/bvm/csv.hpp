#pragma once

// Data-only CSV tables: a `# key=value` metadata block, a header row, then
// rows. Doubles are written with 17 significant digits so they round-trip.

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace bvm {

struct CsvTable {
  std::vector<std::pair<std::string, std::string>> metadata;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

[[nodiscard]] std::string format_double(double v);
[[nodiscard]] std::string format_bool(bool v);

/// Throws ConfigError on an empty table or ragged rows.
void write_csv(const CsvTable& table, std::ostream& out);
/// Throws IoError when the path cannot be written.
void emit_csv(const CsvTable& table, const std::string& path);

/// Inverse of write_csv (quoted fields supported).
[[nodiscard]] CsvTable parse_csv(const std::string& text);

}  // namespace bvm
