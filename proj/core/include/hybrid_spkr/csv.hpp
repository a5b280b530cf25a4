#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace hybrid_spkr {

// Shortest representation that parses back to the same double; independent of locale.
std::string format_double(double value);
double parse_double(const std::string& text);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

void write_csv(std::ostream& out, const CsvTable& table);
// Comma-delimited, no quoting; the first line is the header.
CsvTable read_csv(std::istream& in);

}  // namespace hybrid_spkr
