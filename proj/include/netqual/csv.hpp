#pragma once

// Minimal RFC-4180-ish CSV reader: quoted fields, embedded delimiters and
// doubled quotes, CRLF and LF endings, UTF-8 passed through untouched.

#include <fstream>
#include <string>
#include <vector>

#include "netqual/errors.hpp"

namespace netqual {

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    // 1-based file line of each data row (header is line 1), for diagnostics.
    std::vector<std::size_t> line_numbers;

    std::size_t column(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        throw SchemaError("missing column '" + name + "'");
    }
    bool has_column(const std::string& name) const {
        for (const auto& h : header)
            if (h == name) return true;
        return false;
    }
};

namespace detail {

// Parse one logical CSV record starting at `pos`; quoted fields may span
// physical lines.  Returns false at end of input.
inline bool next_record(const std::string& text, std::size_t& pos, std::size_t& line,
                        std::vector<std::string>& out) {
    out.clear();
    if (pos >= text.size()) return false;
    std::string field;
    bool in_quotes = false;
    bool any = false;
    while (pos < text.size()) {
        char c = text[pos];
        any = true;
        if (in_quotes) {
            if (c == '"') {
                if (pos + 1 < text.size() && text[pos + 1] == '"') {
                    field += '"';
                    pos += 2;
                } else {
                    in_quotes = false;
                    ++pos;
                }
            } else {
                if (c == '\n') ++line;
                field += c;
                ++pos;
            }
            continue;
        }
        switch (c) {
        case '"':
            in_quotes = true;
            ++pos;
            break;
        case ',':
            out.push_back(std::move(field));
            field.clear();
            ++pos;
            break;
        case '\r':
            ++pos;
            break;
        case '\n':
            ++pos;
            ++line;
            out.push_back(std::move(field));
            return true;
        default:
            field += c;
            ++pos;
            break;
        }
    }
    if (in_quotes) throw SchemaError("unterminated quoted field at end of file");
    if (any) {
        out.push_back(std::move(field));
        return true;
    }
    return false;
}

} // namespace detail

inline CsvTable read_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CsvTable table;
    std::size_t pos = 0, line = 1;
    std::vector<std::string> record;
    if (!detail::next_record(text, pos, line, record))
        throw EmptyInputError("'" + path + "' is empty");
    table.header = record;
    while (true) {
        const std::size_t record_line = line;
        if (!detail::next_record(text, pos, line, record)) break;
        if (record.size() == 1 && record[0].empty()) continue; // blank line
        table.rows.push_back(record);
        table.line_numbers.push_back(record_line);
    }
    return table;
}

// Quote a value for CSV output only when required.
inline std::string csv_quote(const std::string& v) {
    bool need = false;
    for (char c : v)
        if (c == ',' || c == '"' || c == '\n' || c == '\r') { need = true; break; }
    if (!need) return v;
    std::string out = "\"";
    for (char c : v) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += '"';
    return out;
}

} // namespace netqual
