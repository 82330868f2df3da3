#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cubegraph {

// Comma separated rows with optional double-quoted fields ("" escapes a quote).
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Column index by name, or -1.
  int column(const std::string& name) const;
};

CsvTable parse_csv(std::istream& in, const std::string& origin);
std::string csv_field(const std::string& s);

}  // namespace cubegraph
