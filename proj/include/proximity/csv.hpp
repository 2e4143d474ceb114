#ifndef PROXIMITY_CSV_HPP
#define PROXIMITY_CSV_HPP

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace proximity::csv {

struct ParseError : std::runtime_error {
    ParseError(const std::string& file, size_t line, size_t column, const std::string& what_arg)
        : std::runtime_error(file + ":" + std::to_string(line) + ":" + std::to_string(column) +
                             ": " + what_arg),
          file(file), line(line), column(column) {}
    std::string file;
    size_t line;
    size_t column;
};

struct Row {
    std::vector<std::string> fields;
    size_t line = 0;  // 1-based line of the first character of the record
};

/// RFC-4180-ish reader: quoted fields, doubled quotes, CR/LF tolerant.
inline std::vector<Row> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    std::vector<Row> rows;
    size_t line = 1;
    size_t i = 0;
    const size_t n = data.size();
    while (i < n) {
        Row row;
        row.line = line;
        std::string field;
        bool any = false;
        while (true) {
            any = true;
            if (i < n && data[i] == '"') {
                ++i;
                while (true) {
                    if (i >= n) throw ParseError(path, line, 1, "unterminated quoted field");
                    if (data[i] == '"') {
                        if (i + 1 < n && data[i + 1] == '"') { field += '"'; i += 2; }
                        else { ++i; break; }
                    } else {
                        if (data[i] == '\n') ++line;
                        field += data[i++];
                    }
                }
            } else {
                while (i < n && data[i] != ',' && data[i] != '\n' && data[i] != '\r')
                    field += data[i++];
            }
            if (i < n && data[i] == ',') { row.fields.push_back(std::move(field)); field.clear(); ++i; continue; }
            break;
        }
        if (any) row.fields.push_back(std::move(field));
        if (i < n && data[i] == '\r') ++i;
        if (i < n && data[i] == '\n') { ++i; ++line; }
        // skip fully empty trailing line
        if (!(row.fields.size() == 1 && row.fields[0].empty() && i >= n))
            rows.push_back(std::move(row));
    }
    return rows;
}

inline std::string quote(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) { if (c == '"') out += "\"\""; else out += c; }
    out += '"';
    return out;
}

inline std::string join(const std::vector<std::string>& fields) {
    std::string out;
    for (size_t i = 0; i < fields.size(); ++i) {
        if (i) out += ',';
        out += quote(fields[i]);
    }
    out += '\n';
    return out;
}

}  // namespace proximity::csv

#endif  // PROXIMITY_CSV_HPP
