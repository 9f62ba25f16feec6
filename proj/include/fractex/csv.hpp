#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

// Small CSV and text-output helpers shared by the file formats.
namespace fractex::csv {

/// Splits one CSV record. Fields may be double-quoted; "" inside quotes is
/// a literal quote. Throws ParseError (with `line`) on an unterminated quote.
std::vector<std::string> split_record(std::string_view record, std::size_t line);

/// Quotes a field only when it contains a comma, quote or newline.
std::string quote(std::string_view field);

/// Shortest representation that round-trips to the same double.
std::string format_double(double v);

/// Parses a full field as a double; throws ParseError on trailing garbage.
double parse_double(std::string_view field, std::size_t line);

/// Splits into lines, stripping a trailing '\r' from each.
std::vector<std::string> split_lines(const std::string& text);

std::string read_file(const std::filesystem::path& path);

/// Writes via a sibling temporary file and rename, so the target path never
/// holds a partial file.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace fractex::csv
