#pragma once
// Published p-level table for 4-year reference vs 1-year target periods,
// transcribed cell by cell with its printed precision and marker. Empty
// strings are cells left blank in the publication.

#include <array>
#include <cmath>
#include <cstddef>
#include <string>

namespace published {

inline constexpr std::size_t kRows = 6;
inline constexpr std::size_t kCols = 8;

inline const std::array<std::array<const char*, kCols>, kRows> kPTable{{
    {"1,000", "* 0,200", "+ 0,040", "+ 0,008", "", "", "", ""},
    {"1,000", "0,360", "* 0,104", "+ 0,027", "+ 0,007", "", "", ""},
    {"1,000", "0,488", "* 0,181", "+ 0,058", "+ 0,017", "+ 0,005", "", ""},
    {"1,000", "0,590", "0,263", "+ 0,099", "+ 0,033", "+ 0,010", "+ 0,003", ""},
    {"1,000", "0,672", "0,345", "* 0,148", "+ 0,056", "+ 0,02", "+ 0,006", ""},
    {"1,000", "0,738", "0,423", "* 0,203", "+ 0,09", "+ 0,033", "+ 0,012", "+ 0,004"},
}};

struct Cell {
    bool printed = false;
    double value = 0.0;
    int decimals = 0;
    std::string marker;
};

inline Cell parse_cell(const std::string& text) {
    Cell c;
    if (text.empty()) return c;
    c.printed = true;
    std::string rest = text;
    if (rest[0] == '+' || rest[0] == '*') {
        c.marker = rest.substr(0, 1);
        rest = rest.substr(2);
    }
    const auto comma = rest.find(',');
    c.decimals = static_cast<int>(rest.size() - comma - 1);
    rest[comma] = '.';
    c.value = std::stod(rest);
    return c;
}

inline Cell p_cell(std::size_t row, std::size_t col) { return parse_cell(kPTable[row][col]); }

// Printed-precision half-up rounding, independent of the library helper.
inline double round_to(double v, int decimals) {
    const double s = std::pow(10.0, decimals);
    return std::floor(v * s + 0.5) / s;
}

}  // namespace published
