#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace rabies::csv {

/// Shortest representation that round-trips to the same double.
std::string format(double v);

/// Writes one comma-separated row terminated by '\n'.
void write_row(std::ostream& out, const std::vector<std::string>& cells);
void write_row(std::ostream& out, const std::vector<double>& cells);

/// Parsed table: header plus rows of string cells. Blank lines and lines
/// starting with '#' are skipped.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

Table parse(std::istream& in);
/// Throws IoError if the file cannot be opened.
Table read_file(const std::string& path);

} // namespace rabies::csv
