// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "cpsim/error.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>

namespace cpsim {

/// Parse a time such as "50us", "20ns", "1.5ms", "10s" or "0.001" (seconds).
/// The decimal mantissa and the unit are combined into one decimal exponent
/// before a single correctly rounded conversion, so "50us" is exactly the
/// double nearest to 5e-5.
inline std::optional<double> parse_duration(std::string_view text) {
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) {
        text.remove_prefix(1);
    }
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) {
        text.remove_suffix(1);
    }
    int unit_exp = 0;
    struct Suffix {
        std::string_view s;
        int exp;
    };
    for (const auto& [s, exp] : {Suffix{"ns", -9}, Suffix{"us", -6}, Suffix{"ms", -3}, Suffix{"s", 0}}) {
        if (text.size() > s.size() && text.substr(text.size() - s.size()) == s) {
            text.remove_suffix(s.size());
            unit_exp = exp;
            break;
        }
    }
    if (text.empty()) {
        return std::nullopt;
    }
    std::string_view mantissa = text;
    long exp = unit_exp;
    if (const auto e = text.find_first_of("eE"); e != std::string_view::npos) {
        mantissa = text.substr(0, e);
        const auto tail = text.substr(e + 1);
        long parsed = 0;
        const auto* first = tail.data();
        if (!tail.empty() && tail.front() == '+') {
            ++first;
        }
        const auto [ptr, ec] = std::from_chars(first, tail.data() + tail.size(), parsed);
        if (ec != std::errc{} || ptr != tail.data() + tail.size() || first == tail.data() + tail.size()) {
            return std::nullopt;
        }
        exp += parsed;
    }
    bool digit = false;
    for (std::size_t i = 0; i < mantissa.size(); ++i) {
        const char c = mantissa[i];
        if (std::isdigit(static_cast<unsigned char>(c))) {
            digit = true;
        } else if (!(c == '.' || ((c == '-' || c == '+') && i == 0))) {
            return std::nullopt;
        }
    }
    if (!digit) {
        return std::nullopt;
    }
    std::string literal(mantissa.front() == '+' ? mantissa.substr(1) : mantissa);
    literal += "e" + std::to_string(exp);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(literal.data(), literal.data() + literal.size(), value);
    if (ec != std::errc{} || ptr != literal.data() + literal.size()) {
        return std::nullopt;
    }
    return value;
}

/// Human-readable step label used in file names ("20ns", "50us", "5ms").
inline std::string duration_label(double seconds) {
    struct Unit {
        const char* name;
        double scale;
    };
    for (const auto& u : {Unit{"s", 1.0}, Unit{"ms", 1e-3}, Unit{"us", 1e-6}, Unit{"ns", 1e-9}}) {
        const double v = seconds / u.scale;
        if (v >= 1.0) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.6g%s", v, u.name);
            return buf;
        }
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6gs", seconds);
    return buf;
}

} // namespace cpsim
