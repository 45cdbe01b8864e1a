// Copyright 2026 The symemit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "symemit/error.hpp"

namespace symemit {

/// Shortest decimal text that parses back to the same double.
inline std::string format_double(double x) {
    if (std::isnan(x)) {
        return "nan";
    }
    if (std::isinf(x)) {
        return x > 0 ? "inf" : "-inf";
    }
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

inline double parse_double(const std::string &s) {
    if (s == "inf" || s == "+inf") {
        return INFINITY;
    }
    if (s == "-inf") {
        return -INFINITY;
    }
    if (s == "nan") {
        return NAN;
    }
    double x = 0;
    const char *begin = s.data();
    if (!s.empty() && s[0] == '+') {
        begin++;
    }
    auto res = std::from_chars(begin, s.data() + s.size(), x);
    require(res.ec == std::errc() && res.ptr == s.data() + s.size(), ErrorKind::io, "not a number: '" + s + "'");
    return x;
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    std::size_t column(const std::string &name) const {
        for (std::size_t i = 0; i < header.size(); i++) {
            if (header[i] == name) {
                return i;
            }
        }
        fail(ErrorKind::io, "CSV has no column '" + name + "'");
    }

    std::vector<double> values(const std::string &name) const {
        std::size_t c = column(name);
        std::vector<double> out;
        out.reserve(rows.size());
        for (const auto &r : rows) {
            out.push_back(r[c]);
        }
        return out;
    }
};

inline void write_csv(std::ostream &out, const CsvTable &table) {
    for (std::size_t i = 0; i < table.header.size(); i++) {
        out << (i ? "," : "") << table.header[i];
    }
    out << "\n";
    for (const auto &r : table.rows) {
        for (std::size_t i = 0; i < r.size(); i++) {
            out << (i ? "," : "") << format_double(r[i]);
        }
        out << "\n";
    }
}

inline std::string to_csv_string(const CsvTable &table) {
    std::ostringstream s;
    write_csv(s, table);
    return s.str();
}

inline CsvTable read_csv(std::istream &in) {
    CsvTable t;
    std::string line;
    auto split = [](const std::string &l) {
        std::vector<std::string> cells;
        std::stringstream ss(l);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            cells.push_back(cell);
        }
        return cells;
    };
    require(static_cast<bool>(std::getline(in, line)), ErrorKind::io, "CSV is empty");
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    t.header = split(line);
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        auto cells = split(line);
        require(cells.size() == t.header.size(), ErrorKind::io, "CSV row has wrong number of cells: " + line);
        std::vector<double> row;
        row.reserve(cells.size());
        for (const auto &c : cells) {
            row.push_back(parse_double(c));
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

inline void write_csv_file(const std::string &path, const CsvTable &table) {
    std::ofstream f(path, std::ios::binary);
    require(static_cast<bool>(f), ErrorKind::io, "cannot open " + path + " for writing");
    write_csv(f, table);
    require(static_cast<bool>(f), ErrorKind::io, "failed writing " + path);
}

inline CsvTable read_csv_file(const std::string &path) {
    std::ifstream f(path, std::ios::binary);
    require(static_cast<bool>(f), ErrorKind::io, "cannot open " + path);
    return read_csv(f);
}

}  // namespace symemit
