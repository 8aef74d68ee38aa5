#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cdgnn {

/// Header plus string cells. Fields containing commas, quotes or newlines are
/// quoted RFC 4180 style on output.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const;  // throws if absent
  friend bool operator==(const CsvTable&, const CsvTable&) = default;
};

void write_csv(std::ostream& out, const CsvTable& table);
void write_csv(const std::string& path, const CsvTable& table);
CsvTable parse_csv(std::istream& in);
CsvTable read_csv(const std::string& path);

/// Shortest decimal form that parses back to the same double.
std::string format_real(double v);

}  // namespace cdgnn
