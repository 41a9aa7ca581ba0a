#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "fusionsim/errors.hpp"

namespace fusionsim::app {

/// A CSV cell: text, a real (9 significant digits) or an integer.
using Cell = std::variant<std::string, double, long long>;

inline std::string format_real(double x) {
    if (std::isnan(x))
        return "";
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.9g", x);
    return buf;
}

inline std::string quote_field(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos)
        return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"')
            out += '"';
        out += c;
    }
    return out + "\"";
}

inline std::string format_cell(const Cell& c) {
    if (const auto* s = std::get_if<std::string>(&c))
        return quote_field(*s);
    if (const auto* d = std::get_if<double>(&c))
        return format_real(*d);
    return std::to_string(std::get<long long>(c));
}

inline std::string format_row(const std::vector<Cell>& row) {
    std::string line;
    for (std::size_t k = 0; k < row.size(); ++k) {
        if (k)
            line += ',';
        line += format_cell(row[k]);
    }
    return line;
}

inline std::string format_header(const std::vector<std::string>& columns) {
    std::string line;
    for (std::size_t k = 0; k < columns.size(); ++k)
        line += (k ? "," : "") + columns[k];
    return line;
}

/// Splits one CSV record (RFC 4180 quoting, no embedded newlines).
inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(std::move(cur));
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    if (quoted)
        throw InputDomainError("unterminated quoted CSV field");
    out.push_back(std::move(cur));
    return out;
}

/**
 * Appends rows to `path`. A new or empty file gets the header first; an
 * existing file must already carry exactly this header.
 */
inline void append_csv(const std::string& path, const std::vector<std::string>& columns,
                       const std::vector<std::vector<Cell>>& rows) {
    const std::string header = format_header(columns);
    bool need_header = true;
    if (std::filesystem::exists(path) && std::filesystem::file_size(path) > 0) {
        std::ifstream in(path);
        std::string first;
        std::getline(in, first);
        if (!first.empty() && first.back() == '\r')
            first.pop_back();
        if (first != header)
            throw std::runtime_error("existing file " + path + " has a different header; refusing to append");
        need_header = false;
    }
    std::ofstream out(path, std::ios::app | std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot open " + path + " for writing");
    if (need_header)
        out << header << '\n';
    for (const auto& r : rows) {
        if (r.size() != columns.size())
            throw InternalInvariantError("CSV row width does not match the header");
        out << format_row(r) << '\n';
    }
}

/// Reads a CSV file with a header into column-keyed records.
struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(const std::string& name) const {
        for (std::size_t k = 0; k < columns.size(); ++k)
            if (columns[k] == name)
                return k;
        throw LookupError("no CSV column named " + name);
    }
    const std::string& at(std::size_t row, const std::string& name) const { return rows.at(row).at(column(name)); }
};

inline CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open " + path);
    CsvTable t;
    std::string line;
    if (!std::getline(in, line))
        return t;
    t.columns = split_csv_line(line);
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        auto r = split_csv_line(line);
        if (r.size() != t.columns.size())
            throw InputDomainError("CSV row width does not match the header in " + path);
        t.rows.push_back(std::move(r));
    }
    return t;
}

} // namespace fusionsim::app
