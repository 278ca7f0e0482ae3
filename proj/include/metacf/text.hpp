#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace metacf::text {

/// Splits one CSV record. Double-quoted fields may contain commas and `""`
/// escapes; no multi-line fields.
inline std::vector<std::string> split_csv(std::string_view line) {
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
        } else if (c == ',') {
            out.push_back(std::move(field));
            field.clear();
        } else {
            field.push_back(c);
        }
    }
    out.push_back(std::move(field));
    return out;
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

/// Reads all lines, dropping a trailing `\r` and trailing empty lines.
inline std::vector<std::string> read_lines(std::istream& in) {
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(std::move(line));
    }
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
    return lines;
}

/// Parses a plain decimal number (the whole field must be consumed).
inline std::optional<double> parse_double(std::string_view s) {
    s = trim(s);
    if (s.empty()) return std::nullopt;
    if (s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

/// Fixed-point with up to `max_decimals` fractional digits; trailing zeros are
/// stripped but one fractional digit is always kept ("80.0", "85.25").
inline std::string format_decimal(double v, int max_decimals = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", max_decimals, v);
    std::string s(buf);
    if (s.front() == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
    if (auto dot = s.find('.'); dot != std::string::npos) {
        while (s.size() > dot + 2 && s.back() == '0') s.pop_back();
    } else {
        s += ".0";
    }
    return s;
}

/// Rounds half away from zero on the decimal expansion, so 81.115 -> "81.12"
/// even though the binary double sits just below the midpoint.
inline std::string round_half_up(double v, int decimals = 2) {
    char buf[80];
    std::snprintf(buf, sizeof buf, "%.*f", decimals + 6, std::fabs(v));
    std::string digits(buf);
    const auto dot = digits.find('.');
    std::string intpart = digits.substr(0, dot);
    std::string frac = digits.substr(dot + 1);
    // Collapse representation error: 81.11499999999 prints as 81.115000 at
    // 8 decimals, so the half-up decision reads the first dropped digit.
    const bool up = frac[static_cast<std::size_t>(decimals)] >= '5';
    std::string kept = intpart + frac.substr(0, static_cast<std::size_t>(decimals));
    if (up) {
        int i = static_cast<int>(kept.size()) - 1;
        while (i >= 0) {
            if (kept[static_cast<std::size_t>(i)] == '9') {
                kept[static_cast<std::size_t>(i)] = '0';
                --i;
            } else {
                ++kept[static_cast<std::size_t>(i)];
                break;
            }
        }
        if (i < 0) kept.insert(kept.begin(), '1');
    }
    const std::size_t int_len = kept.size() - static_cast<std::size_t>(decimals);
    std::string out = kept.substr(0, int_len);
    if (decimals > 0) out += "." + kept.substr(int_len);
    const bool zero = out.find_first_not_of("0.") == std::string::npos;
    if (v < 0 && !zero) out.insert(out.begin(), '-');
    return out;
}

}  // namespace metacf::text
