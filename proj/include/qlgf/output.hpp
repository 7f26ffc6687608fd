// Copyright 2026 The qlgf Authors
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
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "qlgf/errors.hpp"

namespace qlgf {

using Json = nlohmann::ordered_json;

/// Shortest round-trip text. Fixed notation for |x| in [1e-3, 1e6) and zero,
/// exponent notation otherwise.
inline std::string format_number(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    const double a = std::abs(x);
    const auto fmt = (a == 0.0 || (a >= 1e-3 && a < 1e6)) ? std::chars_format::fixed : std::chars_format::scientific;
    char buf[128];
    const auto r = std::to_chars(buf, buf + sizeof buf, x, fmt);
    return std::string(buf, r.ptr);
}

/// RFC 4180: fields holding a comma, quote or line break are quoted and
/// embedded quotes doubled.
inline std::string csv_field(const std::string &s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

using Cell = std::variant<std::int64_t, double, std::string, bool>;

inline std::string cell_text(const Cell &c) {
    return std::visit(
        [](const auto &v) -> std::string {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, double>) return format_number(v);
            else if constexpr (std::is_same_v<T, bool>) return v ? "true" : "false";
            else if constexpr (std::is_same_v<T, std::string>) return v;
            else return std::to_string(v);
        },
        c);
}

inline Json cell_json(const Cell &c) {
    return std::visit(
        [](const auto &v) -> Json {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, double>) return std::isfinite(v) ? Json(v) : Json(nullptr);
            else return Json(v);
        },
        c);
}

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;

    void add(std::vector<Cell> row) {
        if (row.size() != columns.size()) throw std::logic_error("table row width does not match the header");
        rows.push_back(std::move(row));
    }
};

inline std::string to_csv(const Table &t) {
    std::string out;
    for (std::size_t i = 0; i < t.columns.size(); ++i) out += (i ? "," : "") + csv_field(t.columns[i]);
    out += "\r\n";
    for (const auto &row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + csv_field(cell_text(row[i]));
        out += "\r\n";
    }
    return out;
}

inline Json to_json(const Table &t) {
    Json arr = Json::array();
    for (const auto &row : t.rows) {
        Json obj = Json::object();
        for (std::size_t i = 0; i < row.size(); ++i) obj[t.columns[i]] = cell_json(row[i]);
        arr.push_back(std::move(obj));
    }
    return arr;
}

inline void write_file(const std::filesystem::path &path, const std::string &content) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << content;
    out.close();
    if (!out) throw IoError("write failed: " + path.string());
}

inline std::string dump_json(const Json &j) { return j.dump(2) + "\n"; }

/// Writes a table as <stem>.csv or <stem>.json and returns the file name.
inline std::string write_table(const Table &t, const std::filesystem::path &dir, const std::string &stem,
                               const std::string &format) {
    if (format == "csv") {
        write_file(dir / (stem + ".csv"), to_csv(t));
        return stem + ".csv";
    }
    if (format == "json") {
        write_file(dir / (stem + ".json"), dump_json(to_json(t)));
        return stem + ".json";
    }
    throw UsageError("unknown output format '" + format + "' (csv or json)");
}

}  // namespace qlgf
