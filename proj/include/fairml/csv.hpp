#pragma once

#include <fstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "fairml/error.hpp"

namespace fairml {

// Raw parsed rows, pre-encoding. Cells are kept verbatim ("?" included).
struct RecordTable {
    std::vector<std::string> column_names;
    std::vector<std::vector<std::string>> rows;

    std::size_t n_rows() const { return rows.size(); }

    int column_index(const std::string& name) const {
        for (std::size_t i = 0; i < column_names.size(); ++i) {
            if (column_names[i] == name) return static_cast<int>(i);
        }
        return -1;
    }
};

// Splits one line on commas; fields may be wrapped in double quotes with ""
// as the embedded-quote escape. Other dialects are out of scope.
inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool in_quotes = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                cur.push_back(c);
            }
        } else if (c == '"' && cur.empty()) {
            in_quotes = true;
        } else if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    return fields;
}

// Reads a comma-separated UTF-8 file whose first line is the header.
// No type coercion happens here.
inline RecordTable load_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open file: " + path);

    RecordTable table;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line_no == 1) {
            table.column_names = split_csv_line(line);
            std::unordered_set<std::string> seen;
            for (const auto& name : table.column_names) {
                if (!seen.insert(name).second) {
                    throw Error("duplicate header name: " + name);
                }
            }
            continue;
        }
        if (line.empty() && in.peek() == std::ifstream::traits_type::eof()) break;
        auto fields = split_csv_line(line);
        if (fields.size() != table.column_names.size()) {
            throw Error("ragged row: data row " + std::to_string(line_no - 1) + " has " +
                        std::to_string(fields.size()) + " cells, expected " +
                        std::to_string(table.column_names.size()));
        }
        table.rows.push_back(std::move(fields));
    }
    if (line_no == 0) throw Error("empty file: " + path);
    return table;
}

} // namespace fairml
