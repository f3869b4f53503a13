#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fedsig::csv {

using Row = std::vector<std::string>;

// Comma-separated text with RFC 4180 quoting: fields containing a comma,
// quote, CR or LF are quoted and embedded quotes doubled.
void write_row(std::ostream& out, std::span<const std::string> fields);
std::string join_row(std::span<const std::string> fields);

// Parses a whole document. Rows end at LF or CRLF outside quotes; a trailing
// newline does not produce an empty row.
std::vector<Row> parse(std::string_view text);

// Shortest decimal text that parses back to the same double.
std::string format_double(double value);
std::optional<double> parse_double(std::string_view text);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

}  // namespace fedsig::csv
