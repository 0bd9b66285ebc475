#pragma once

#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace sika::csv {

using Row = std::vector<std::string>;

/// Comma-separated, double-quote escaped. Accepts LF or CRLF line ends and
/// quoted fields spanning lines. Throws InputError on an unterminated quote.
std::vector<Row> parse(std::string_view text);
std::vector<Row> read_file(const std::string& path);

/// Quotes a field only when it holds a comma, quote, CR or LF.
std::string format_field(std::string_view field);
/// One record terminated by LF.
void write_row(std::ostream& out, const Row& row);

}  // namespace sika::csv
