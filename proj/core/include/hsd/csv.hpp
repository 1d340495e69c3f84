#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace hsd::csv {

using Row = std::vector<std::string>;

// RFC 4180 style reader: quoted fields may contain the delimiter, doubled
// quotes and newlines. A trailing newline does not produce an empty row.
std::vector<Row> parse(std::string_view content, char delimiter);

// Comma if the first line has no tab, otherwise tab.
char sniff_delimiter(std::string_view content);

std::string format_field(std::string_view field, char delimiter);
std::string format_row(const Row& row, char delimiter);

}  // namespace hsd::csv
