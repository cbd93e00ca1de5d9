#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cst/error.hpp"

namespace cst {

// Minimal RFC-4180 CSV support: quoted fields, embedded quotes doubled,
// embedded delimiters and newlines inside quotes. Reader accepts a
// configurable delimiter; writer always emits commas.
namespace csv {

inline std::vector<std::string> split_line(const std::string& line, char delim) {
    std::vector<std::string> out;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == delim) {
            out.push_back(field);
            field.clear();
        } else if (c == '\r' && i + 1 == line.size()) {
            // tolerate CRLF input
        } else {
            field.push_back(c);
        }
    }
    out.push_back(field);
    return out;
}

// Reads a whole file into rows of fields. Quoted fields may span lines.
inline std::vector<std::vector<std::string>> read_file(const std::string& path,
                                                       char delim = ',') {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file: " + path);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    std::string pending;
    auto unbalanced = [](const std::string& s) {
        int quotes = 0;
        for (char c : s)
            if (c == '"') ++quotes;
        return quotes % 2 == 1;
    };
    while (std::getline(in, line)) {
        if (!pending.empty()) {
            pending += "\n" + line;
            if (unbalanced(pending)) continue;
            rows.push_back(split_line(pending, delim));
            pending.clear();
            continue;
        }
        if (unbalanced(line)) {
            pending = line;
            continue;
        }
        rows.push_back(split_line(line, delim));
    }
    if (!pending.empty()) throw DataError("unterminated quoted field in " + path);
    // drop a trailing fully-empty line produced by a final newline
    while (!rows.empty() && rows.back().size() == 1 && rows.back()[0].empty())
        rows.pop_back();
    return rows;
}

inline std::string quote(const std::string& field) {
    const bool needs = field.find_first_of(",\"\n\r") != std::string::npos;
    if (!needs) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out += "\"";
    return out;
}

inline void write_row(std::ostream& os, const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) os << ',';
        os << quote(fields[i]);
    }
    os << '\n';
}

}  // namespace csv

// Shortest-round-trip style formatting is not needed; a fixed %.17g is
// deterministic and preserves doubles exactly.
inline std::string format_double(double v, int precision = 17) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*g", precision, v);
    return buf;
}

}  // namespace cst
