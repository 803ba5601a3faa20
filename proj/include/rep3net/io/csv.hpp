#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace rep3net::io {

using CsvRow = std::vector<std::string>;

/// RFC 4180 style parsing: comma separated, double-quoted fields may hold
/// commas, quotes ("") and newlines. CRLF and LF line ends are accepted.
/// Throws DataError on an unterminated quote.
std::vector<CsvRow> parse_csv(std::string_view text);

/// Reads and parses a file; throws DataError if it cannot be opened.
std::vector<CsvRow> read_csv(const std::filesystem::path& path);

/// Quotes a field only when it contains a comma, quote, or line break.
std::string csv_escape(std::string_view field);

void write_csv_row(std::ostream& out, const CsvRow& row);

/// Shortest decimal text that parses back to exactly the same double.
std::string format_double(double value);

/// Strict number parsing: surrounding blanks allowed, anything else that is
/// not part of the number rejects the whole field.
std::optional<double> parse_double(std::string_view text);

/// Index of `name` in a header row, or nullopt.
std::optional<std::size_t> column_index(const CsvRow& header, std::string_view name);

}  // namespace rep3net::io
