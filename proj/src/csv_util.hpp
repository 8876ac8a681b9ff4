#pragma once

// Small helpers shared by the CSV readers.

#include <charconv>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

#include "tpp/error.hpp"

namespace tpp::csv {

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split(std::string_view line) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (true) {
        const auto comma = line.find(',', pos);
        out.push_back(trim(line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos)));
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    return out;
}

inline double parse_double(std::string_view text, std::size_t line) {
    const std::string t = trim(text);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
        throw ValidationError("line " + std::to_string(line) + ": cannot parse number '" + t + "'");
    }
    return v;
}

inline long long parse_integer(std::string_view text, std::size_t line) {
    const std::string t = trim(text);
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
        throw ValidationError("line " + std::to_string(line) + ": cannot parse integer '" + t + "'");
    }
    return v;
}

/// Reads data rows (skipping blank and `#` lines) after checking the header.
template <class Row>
void for_each_row(std::istream& in, const std::vector<std::string>& header, Row&& row) {
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        auto cells = split(t);
        if (!header_seen) {
            if (cells != header) {
                std::string expected;
                for (const auto& h : header) expected += (expected.empty() ? "" : ",") + h;
                throw ValidationError("line " + std::to_string(line_no) + ": expected header '" + expected + "'");
            }
            header_seen = true;
            continue;
        }
        if (cells.size() != header.size()) {
            throw ValidationError("line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                                  " columns, got " + std::to_string(cells.size()));
        }
        row(cells, line_no);
    }
    if (!header_seen) throw ValidationError("CSV input is empty");
}

}  // namespace tpp::csv
