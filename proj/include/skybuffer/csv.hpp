#pragma once

// Small CSV layer: quoted fields, embedded commas/newlines, CRLF endings.

#include <cstdint>
#include <cstdio>
#include <istream>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

#include "skybuffer/common.hpp"

namespace skybuffer {

class CsvReader {
public:
    explicit CsvReader(std::istream& in) : in_(in) {}

    // Reads one record into `fields`. Returns false at end of input.
    bool next_row(std::vector<std::string>& fields) {
        fields.clear();
        std::string cell;
        bool in_quotes = false;
        bool saw_any = false;
        int ch;
        while ((ch = in_.get()) != std::char_traits<char>::eof()) {
            saw_any = true;
            const char c = static_cast<char>(ch);
            if (in_quotes) {
                if (c == '"') {
                    if (in_.peek() == '"') {
                        cell.push_back('"');
                        in_.get();
                    } else {
                        in_quotes = false;
                    }
                } else {
                    cell.push_back(c);
                }
                continue;
            }
            if (c == '"') {
                in_quotes = true;
            } else if (c == ',') {
                fields.push_back(std::move(cell));
                cell.clear();
            } else if (c == '\n') {
                fields.push_back(std::move(cell));
                return true;
            } else if (c != '\r') {
                cell.push_back(c);
            }
        }
        if (!saw_any) return false;
        fields.push_back(std::move(cell));
        return true;
    }

private:
    std::istream& in_;
};

inline void write_csv_field(std::ostream& out, const std::string& field) {
    const bool needs_quote = field.find_first_of(",\"\n\r") != std::string::npos;
    if (!needs_quote) {
        out << field;
        return;
    }
    out << '"';
    for (char c : field) {
        if (c == '"') out << '"';
        out << c;
    }
    out << '"';
}

inline void write_csv_row(std::ostream& out, const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out << ',';
        write_csv_field(out, fields[i]);
    }
    out << '\n';
}

// Header-name -> column-index lookup with required-column enforcement.
class HeaderIndex {
public:
    explicit HeaderIndex(const std::vector<std::string>& header) {
        for (std::size_t i = 0; i < header.size(); ++i) index_.emplace(header[i], i);
    }

    int require(const std::string& name) const {
        const auto it = index_.find(name);
        if (it == index_.end()) throw SchemaError("missing required header column: " + name);
        return static_cast<int>(it->second);
    }

    int find(const std::string& name) const {
        const auto it = index_.find(name);
        return it == index_.end() ? -1 : static_cast<int>(it->second);
    }

private:
    std::unordered_map<std::string, std::size_t> index_;
};

inline std::string field_at(const std::vector<std::string>& row, int idx) {
    if (idx < 0 || static_cast<std::size_t>(idx) >= row.size()) return {};
    return row[static_cast<std::size_t>(idx)];
}

namespace detail {

// Integral values print without a decimal point; everything else round-trips
// binary64 exactly.
inline std::string fmt_double(double v) {
    if (v == static_cast<double>(static_cast<std::int64_t>(v)) && v < 1e15 && v > -1e15) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%lld", static_cast<long long>(v));
        return buf;
    }
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace detail

}  // namespace skybuffer
