#pragma once

// Tabular reports with a fixed column order and 17-significant-digit floats, so
// identical inputs always produce byte-identical files.

#include "mbl/common.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace mbl {

using Cell = std::variant<std::int64_t, double, std::string, bool>;

struct Report {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;

    void add_row(std::vector<Cell> row) {
        require(row.size() == columns.size(), "report row width differs from the header");
        rows.push_back(std::move(row));
    }
};

enum class ReportFormat { csv, json };

inline ReportFormat parse_report_format(const std::string& s) {
    if (s == "csv") return ReportFormat::csv;
    if (s == "json") return ReportFormat::json;
    throw InvalidArgument("unknown report format: " + s);
}

inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace detail {

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

inline std::string json_string(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            default:
                if (static_cast<unsigned char>(c) < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof buf, "\\u%04x", c);
                    out += buf;
                } else {
                    out += c;
                }
        }
    }
    return out + "\"";
}

inline std::string cell_csv(const Cell& c) {
    return std::visit(
        [](const auto& v) -> std::string {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, double>) return format_double(v);
            else if constexpr (std::is_same_v<T, bool>) return v ? "true" : "false";
            else if constexpr (std::is_same_v<T, std::string>) return csv_field(v);
            else return std::to_string(v);
        },
        c);
}

inline std::string cell_json(const Cell& c) {
    return std::visit(
        [](const auto& v) -> std::string {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, double>) return std::isfinite(v) ? format_double(v) : "null";
            else if constexpr (std::is_same_v<T, bool>) return v ? "true" : "false";
            else if constexpr (std::is_same_v<T, std::string>) return json_string(v);
            else return std::to_string(v);
        },
        c);
}

}  // namespace detail

inline std::string render_csv(const Report& r) {
    std::ostringstream os;
    for (std::size_t i = 0; i < r.columns.size(); ++i) os << (i ? "," : "") << detail::csv_field(r.columns[i]);
    os << '\n';
    for (const auto& row : r.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << detail::cell_csv(row[i]);
        os << '\n';
    }
    return os.str();
}

/// Flat JSON object with keys in insertion order.
using JsonFields = std::vector<std::pair<std::string, Cell>>;

inline std::string render_json_object(const JsonFields& fields, const std::string& indent = "") {
    std::ostringstream os;
    os << "{";
    for (std::size_t i = 0; i < fields.size(); ++i) {
        os << (i ? ", " : "") << detail::json_string(fields[i].first) << ": " << detail::cell_json(fields[i].second);
    }
    os << "}";
    return indent + os.str();
}

inline std::string render_json(const Report& r) {
    std::ostringstream os;
    os << "[\n";
    for (std::size_t k = 0; k < r.rows.size(); ++k) {
        JsonFields fields;
        for (std::size_t i = 0; i < r.columns.size(); ++i) fields.emplace_back(r.columns[i], r.rows[k][i]);
        os << render_json_object(fields, "  ") << (k + 1 < r.rows.size() ? ",\n" : "\n");
    }
    os << "]\n";
    return os.str();
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ComputationError("cannot write " + path.string());
    out << text;
    if (!out) throw ComputationError("failed while writing " + path.string());
}

/// Writes `r` as CSV (header + rows) or as a JSON array of row objects.
inline void emit_report(const Report& r, ReportFormat fmt, const std::filesystem::path& path) {
    require(!r.rows.empty(), "refusing to emit an empty report");
    write_text_file(path, fmt == ReportFormat::csv ? render_csv(r) : render_json(r));
}

}  // namespace mbl
