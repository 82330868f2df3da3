#include "cubegraph/csv.hpp"

#include <istream>

#include "cubegraph/error.hpp"

namespace cubegraph {

int CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return static_cast<int>(i);
  }
  return -1;
}

namespace {

// Reads one record; returns false at end of input.
bool read_record(std::istream& in, std::vector<std::string>& fields, std::size_t& line, const std::string& origin) {
  fields.clear();
  std::string field;
  bool quoted = false, any = false;
  char c;
  while (in.get(c)) {
    any = true;
    if (quoted) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field += '"';
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        field += c;
      }
      continue;
    }
    if (c == '"' && field.empty()) {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c == '\n') {
      ++line;
      fields.push_back(std::move(field));
      return true;
    } else if (c != '\r') {
      field += c;
    }
  }
  if (quoted) throw IoError(origin + ":" + std::to_string(line) + ": unterminated quoted field");
  if (!any) return false;
  fields.push_back(std::move(field));
  return true;
}

}  // namespace

CsvTable parse_csv(std::istream& in, const std::string& origin) {
  CsvTable t;
  std::size_t line = 1;
  std::vector<std::string> fields;
  if (!read_record(in, t.header, line, origin)) throw IoError(origin + ": empty CSV file");
  while (read_record(in, fields, line, origin)) {
    if (fields.size() == 1 && fields[0].empty()) continue;
    if (fields.size() != t.header.size()) {
      throw IoError(origin + ":" + std::to_string(line - 1) + ": expected " + std::to_string(t.header.size()) +
                    " fields, found " + std::to_string(fields.size()));
    }
    t.rows.push_back(fields);
  }
  return t;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace cubegraph
