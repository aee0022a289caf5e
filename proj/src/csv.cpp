#include "teamkappa/csv.hpp"

#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "teamkappa/error.hpp"

namespace teamkappa::csv {

std::vector<Row> parse(std::string_view text, char delimiter) {
    if (text.starts_with("\xEF\xBB\xBF")) text.remove_prefix(3);

    std::vector<Row> rows;
    Record current;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;
    std::size_t line = 1;
    std::size_t record_line = 1;

    auto end_field = [&] {
        current.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    auto end_record = [&] {
        end_field();
        const bool blank = current.size() == 1 && current.front().empty();
        if (!blank) rows.push_back(Row{record_line, std::move(current)});
        current.clear();
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        const char ch = text[i];
        if (in_quotes) {
            if (ch == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                if (ch == '\n') ++line;
                field.push_back(ch);
            }
            continue;
        }
        if (ch == '"' && !field_started) {
            in_quotes = true;
            field_started = true;
        } else if (ch == delimiter) {
            end_field();
        } else if (ch == '\r') {
            if (i + 1 < text.size() && text[i + 1] == '\n') continue;
            end_record();
            record_line = ++line;
        } else if (ch == '\n') {
            end_record();
            record_line = ++line;
        } else {
            field.push_back(ch);
            field_started = true;
        }
    }
    if (in_quotes) {
        throw DataError(fmt::format("malformed row at line {}: unterminated quoted field", record_line));
    }
    if (field_started || !current.empty()) end_record();
    return rows;
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError(fmt::format("cannot open file '{}'", path.string()));
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_text(const std::filesystem::path& path, std::string_view text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError(fmt::format("cannot write file '{}'", path.string()));
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw DataError(fmt::format("write failed for '{}'", path.string()));
}

std::string escape(std::string_view field, char delimiter) {
    if (field.find_first_of(std::string{delimiter, '"', '\n', '\r'}) == std::string_view::npos) {
        return std::string(field);
    }
    std::string out = "\"";
    for (char ch : field) {
        if (ch == '"') out.push_back('"');
        out.push_back(ch);
    }
    out.push_back('"');
    return out;
}

std::string join(const Record& fields, char delimiter) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out.push_back(delimiter);
        out += escape(fields[i], delimiter);
    }
    return out;
}

std::string fixed6(double value) {
    std::string s = fmt::format("{:.6f}", value);
    if (s == "-0.000000") s.erase(0, 1);
    return s;
}

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(std::string_view s, char separator) {
    std::vector<std::string> out;
    if (trim(s).empty()) return out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(separator, start);
        out.emplace_back(trim(s.substr(start, pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

}  // namespace teamkappa::csv
