#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace teamkappa::csv {

using Record = std::vector<std::string>;

// One parsed record plus the 1-based line it started on.
struct Row {
    std::size_t line = 0;
    Record fields;
};

// RFC 4180 style reader: quoted fields, doubled quotes, embedded newlines,
// LF or CRLF line ends, optional UTF-8 BOM. Blank lines are skipped.
std::vector<Row> parse(std::string_view text, char delimiter = ',');

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, std::string_view text);

// Quotes a field when it contains the delimiter, a quote or a line break.
std::string escape(std::string_view field, char delimiter = ',');

std::string join(const Record& fields, char delimiter = ',');

// Fixed notation with six decimals; negative zero prints as 0.000000.
std::string fixed6(double value);

std::string_view trim(std::string_view s);

std::vector<std::string> split_list(std::string_view s, char separator = ',');

}  // namespace teamkappa::csv
