#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace aegis::csv {

struct Row {
    std::size_t line = 0;  // 1-based source line
    std::vector<std::string> cells;
};

/// Header plus data rows. Blank lines are skipped; every data row must have
/// exactly as many cells as the header.
struct Table {
    std::vector<std::string> header;
    std::vector<Row> rows;

    /// Index of a header column, or -1.
    long column(std::string_view name) const;
};

/// Simple comma-separated reader: no quoting, surrounding whitespace trimmed,
/// optional UTF-8 BOM and CRLF line endings accepted.
Table read(const std::filesystem::path& path);
Table parse(std::istream& in, const std::string& source_name);

double parse_double(std::string_view cell, const std::string& what, std::size_t line);

/// Shortest representation that round-trips through `parse_double`.
std::string format_double(double value);

void write_row(std::ostream& out, const std::vector<std::string>& cells);

}  // namespace aegis::csv
